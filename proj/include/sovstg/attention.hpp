// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "sovstg/geometry.hpp"

namespace sovstg {

/// Scaled dot-product multi-head attention with separate q/k/v/out
/// projections. Masks are boolean with true meaning "may attend"; a mask may
/// be (Nq, Nk) or batched (B, Nq, Nk).
class MultiHeadAttentionImpl : public torch::nn::Module {
 public:
  MultiHeadAttentionImpl(int64_t dim, int64_t heads);

  /// query (B, Nq, D); key/value (B, Nk, D) or unbatched (Nk, D).
  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value,
                        const torch::Tensor& mask = {});

  int64_t heads() const { return heads_; }

  torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};

 private:
  int64_t dim_;
  int64_t heads_;
};
TORCH_MODULE(MultiHeadAttention);

class FeedForwardImpl : public torch::nn::Module {
 public:
  FeedForwardImpl(int64_t dim, int64_t hidden);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(FeedForward);

/// Plain ReLU MLP: in -> hidden x (layers-1) -> out.
class MlpImpl : public torch::nn::Module {
 public:
  MlpImpl(int64_t in, int64_t hidden, int64_t out, int64_t layers);
  torch::Tensor forward(torch::Tensor x);

  torch::nn::ModuleList layers;
};
TORCH_MODULE(Mlp);

/// Sinusoidal encoding of (cx, cy, w, h): dim/4 entries per coordinate,
/// alternating sin/cos, concatenated in coordinate order. `boxes` is (..., 4).
torch::Tensor positional_encode_boxes(const torch::Tensor& boxes, int64_t dim, double temperature = 10000.0);

torch::Tensor positional_encode_box(const Box& box, int64_t dim, double temperature = 10000.0);

/// 2-D sinusoidal encoding for an H x W grid, (H*W, dim), row-major.
torch::Tensor positional_encode_grid(int64_t height, int64_t width, int64_t dim, double temperature = 10000.0);

}  // namespace sovstg

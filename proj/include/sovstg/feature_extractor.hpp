// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "sovstg/attention.hpp"
#include "sovstg/deformable.hpp"

namespace sovstg {

struct ExtractorOptions {
  int64_t dim = 64;
  int64_t levels = 2;          // 2 or 3; strides 4, 8, 16
  int64_t channels = 32;       // backbone width
  int64_t encoder_layers = 1;  // self-attention layers over the coarsest level
  int64_t heads = 4;
};

class EncoderLayerImpl : public torch::nn::Module {
 public:
  EncoderLayerImpl(int64_t dim, int64_t heads, int64_t hidden);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& pos);

  MultiHeadAttention attn{nullptr};
  FeedForward ffn{nullptr};
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
};
TORCH_MODULE(EncoderLayer);

/// Small conv backbone plus a transformer encoder producing a D-wide feature
/// pyramid. Stands in for the pretrained backbone/encoder of a full-size
/// detector.
class ToyFeatureExtractorImpl : public torch::nn::Module {
 public:
  explicit ToyFeatureExtractorImpl(const ExtractorOptions& options);

  /// images (B, 3, H, W) in [0,1].
  MultiScaleFeatures forward(const torch::Tensor& images);

  const ExtractorOptions& options() const { return options_; }

 private:
  ExtractorOptions options_;
  torch::nn::Sequential stem{nullptr};
  torch::nn::ModuleList downs;
  torch::nn::ModuleList projections;
  torch::nn::ModuleList norms;
  torch::nn::ModuleList encoder;
};
TORCH_MODULE(ToyFeatureExtractor);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "sovstg/attention.hpp"
#include "sovstg/deformable.hpp"

namespace sovstg {

struct DecoderOptions {
  int64_t dim = 64;
  int64_t heads = 4;
  int64_t layers = 2;
  int64_t levels = 2;
  int64_t points = 4;
  int64_t ffn_hidden = 128;
};

/// Post-norm decoder layer: masked self-attention with positional queries,
/// box-constrained deformable cross-attention, feed-forward.
class DecoderLayerImpl : public torch::nn::Module {
 public:
  explicit DecoderLayerImpl(const DecoderOptions& options);

  torch::Tensor forward(const torch::Tensor& tgt, const torch::Tensor& pos, const torch::Tensor& boxes,
                        const MultiScaleFeatures& features, const torch::Tensor& mask);

  MultiHeadAttention self_attn{nullptr};
  BoxDeformableAttention cross_attn{nullptr};
  FeedForward ffn{nullptr};
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr};
};
TORCH_MODULE(DecoderLayer);

/// Per-layer outputs of one detection stack.
struct StackOutput {
  std::vector<torch::Tensor> embeddings;  // N_l x (B, N, D)
  std::vector<torch::Tensor> boxes;       // N_l x (B, N, 4), refined anchors
};

/// Anchor-conditioned decoder stack. Each layer predicts logit-space offsets
/// that refine its input anchors; the refined anchors (detached) feed the
/// next layer.
class DetectionDecoderStackImpl : public torch::nn::Module {
 public:
  DetectionDecoderStackImpl(const DecoderOptions& options, int64_t num_queries);

  /// queries (B, N, D); anchors (B, N, 4) inside (0,1); mask (B, N, N) or (N, N).
  StackOutput forward(const torch::Tensor& queries, const torch::Tensor& anchors, const MultiScaleFeatures& features,
                      const torch::Tensor& mask);

  /// Learnable initial anchors of the inference queries, (N_q, 4) in (0,1).
  torch::Tensor initial_anchors() const;

  const DecoderOptions& options() const { return options_; }
  int64_t num_queries() const { return num_queries_; }

  torch::Tensor anchor_logits;  // (N_q, 4)
  torch::nn::ModuleList layers;
  torch::nn::ModuleList box_heads;
  Mlp pos_head{nullptr};

 private:
  DecoderOptions options_;
  int64_t num_queries_;
};
TORCH_MODULE(DetectionDecoderStack);

/// Deep copy of a stack's parameters into a freshly built stack.
DetectionDecoderStack clone_object_to_subject(const DetectionDecoderStack& object_stack);

/// Subject-object fusion. Per layer the subject and object embeddings are
/// averaged; with cross-attention enabled each average absorbs the verb
/// priors through a residual cross-attention and consecutive layers are
/// averaged along a bottom-up path. Without it the plain average is used.
class SOFusionImpl : public torch::nn::Module {
 public:
  SOFusionImpl(int64_t dim, int64_t heads, bool cross_attention);

  std::vector<torch::Tensor> forward(const std::vector<torch::Tensor>& subject, const std::vector<torch::Tensor>& object,
                                     const torch::Tensor& verb_priors);

  bool uses_cross_attention() const { return cross_attention_; }

  MultiHeadAttention cross_attn{nullptr};

 private:
  bool cross_attention_;
};
TORCH_MODULE(SOFusion);

/// Verb decoder: a stack whose deformable sampling is confined to a fixed
/// verb box per query. Layer i receives the fused verb query of layer i added
/// to the running embedding.
class VerbDecoderImpl : public torch::nn::Module {
 public:
  explicit VerbDecoderImpl(const DecoderOptions& options);

  std::vector<torch::Tensor> forward(const std::vector<torch::Tensor>& verb_queries, const MultiScaleFeatures& features,
                                     const torch::Tensor& verb_boxes, const torch::Tensor& mask);

  torch::nn::ModuleList layers;
  Mlp pos_head{nullptr};

 private:
  DecoderOptions options_;
};
TORCH_MODULE(VerbDecoder);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "sovstg/advisor.hpp"
#include "sovstg/box_ops.hpp"
#include "sovstg/decoders.hpp"
#include "sovstg/denoising.hpp"
#include "sovstg/feature_extractor.hpp"
#include "sovstg/label_priors.hpp"

namespace sovstg {

/// Model sizes plus the architectural ablation switches.
struct ModelConfig {
  int64_t num_objects = 6;
  int64_t num_verbs = 5;
  int64_t num_hoi = 30;

  int64_t dim = 64;
  int64_t queries = 16;
  int64_t layers = 2;
  int64_t heads = 4;
  int64_t levels = 2;
  int64_t points = 4;
  int64_t ffn_hidden = 128;
  int64_t backbone_channels = 16;
  int64_t encoder_layers = 1;
  int64_t advisor_dim = 32;

  bool subject_decoder = true;
  bool verb_decoder = true;
  bool so_attention = true;
  bool vla = false;
  bool box_positional_encoding = true;  // PE(B_v) inside the vision advisor
  bool vla_verb_prediction = true;
  box_ops::VerbBoxKind verb_box = box_ops::VerbBoxKind::kAsmbr;

  /// Rejects contradictory switches (S-O attention without a subject decoder).
  void validate() const;

  DecoderOptions decoder_options() const;
};

/// Per-query outputs. Per-layer vectors hold N_l tensors of shape (B, N, .),
/// N = N_q inference queries followed by the DN block (if any).
struct ModelOutput {
  int64_t num_queries = 0;
  int64_t dn_length = 0;

  std::vector<torch::Tensor> subject_boxes;
  std::vector<torch::Tensor> object_boxes;
  std::vector<torch::Tensor> object_logits;
  std::vector<torch::Tensor> verb_logits;
  torch::Tensor hoi_logits;  // (B, N, C_hoi) when the advisor is on
  torch::Tensor verb_boxes;  // (B, N, 4)

  std::vector<torch::Tensor> subject_embeddings;  // E_s
  std::vector<torch::Tensor> object_embeddings;   // E_o
  std::vector<torch::Tensor> verb_queries;        // fused S-O queries
  std::vector<torch::Tensor> verb_embeddings;     // E_v'
  std::vector<torch::Tensor> advisor_embeddings;  // E_va
  torch::Tensor bridge_embeddings;                // E_vt

  int64_t layers() const { return static_cast<int64_t>(object_boxes.size()); }
};

/// Restricts every tensor of an output to the rows [begin, begin + length).
ModelOutput slice_queries(const ModelOutput& out, int64_t begin, int64_t length);

class SovStgModelImpl : public torch::nn::Module {
 public:
  explicit SovStgModelImpl(const ModelConfig& config);

  MultiScaleFeatures extract(const torch::Tensor& images);

  /// images (B, 3, H, W); advisor_tokens (B, N_ga, D_a), needed when the
  /// advisor is on; dn may be null.
  ModelOutput forward(const torch::Tensor& images, const torch::Tensor& advisor_tokens = {},
                      const PaddedDN* dn = nullptr);

  ModelOutput forward_features(const MultiScaleFeatures& features, const torch::Tensor& advisor_tokens,
                               const PaddedDN* dn);

  /// Copies text-derived HOI classifier weights into the bridge head.
  void init_hoi_head(const torch::Tensor& text_weights);

  const ModelConfig& config() const { return config_; }

  LabelEmbeddingBank bank{nullptr};
  CoefficientMatrices coeffs{nullptr};
  ToyFeatureExtractor extractor{nullptr};
  DetectionDecoderStack object_stack{nullptr};
  DetectionDecoderStack subject_stack{nullptr};
  torch::nn::ModuleList subject_box_heads{nullptr};  // only without a subject decoder
  torch::Tensor subject_anchor_logits;               // only without a subject decoder
  torch::nn::Linear object_head{nullptr};
  torch::nn::Linear verb_head{nullptr};
  SOFusion fusion{nullptr};
  VerbDecoder verb_decoder{nullptr};
  VisionAdvisorDecoder advisor{nullptr};
  VHOIBridge bridge{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(SovStgModel);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sovstg/attention.hpp"
#include "sovstg/deformable.hpp"
#include "sovstg/types.hpp"

namespace sovstg {

/// Image-level tokens from a frozen vision-language model, (N_ga, D_a).
struct AdvisorFeatures {
  torch::Tensor tokens;

  int64_t num_tokens() const { return tokens.size(0); }
  int64_t dim() const { return tokens.size(1); }
};

/// Plug point for a frozen vision-language model. Implementations must be
/// deterministic and never take part in optimisation.
class AdvisorProvider {
 public:
  virtual ~AdvisorProvider() = default;

  virtual std::string name() const = 0;
  virtual int64_t feature_dim() const = 0;
  virtual int64_t num_tokens() const = 0;
  virtual int64_t text_dim() const = 0;

  /// image (3, H, W) in [0,1].
  virtual AdvisorFeatures extract_image_features(const torch::Tensor& image) const = 0;

  /// One embedding set (M, text_dim) per phrase.
  virtual std::vector<torch::Tensor> encode_hoi_prompts(const std::vector<std::string>& phrases) const = 0;

  /// Digest of the provider's internal state, for frozen-ness checks.
  virtual uint64_t state_hash() const = 0;
};

struct StubProviderOptions {
  uint64_t seed = 7;
  int64_t feature_dim = 32;
  int64_t grid = 4;  // N_ga = grid * grid
  int64_t text_dim = 64;
  int64_t prompt_set_size = 4;
};

/// Deterministic desk-scale stand-in: image tokens are a fixed random
/// projection of per-cell colour statistics; prompt embeddings are
/// pseudo-random vectors seeded from a hash of the phrase.
class StubProvider final : public AdvisorProvider {
 public:
  explicit StubProvider(const StubProviderOptions& options);

  std::string name() const override { return "stub"; }
  int64_t feature_dim() const override { return options_.feature_dim; }
  int64_t num_tokens() const override { return options_.grid * options_.grid; }
  int64_t text_dim() const override { return options_.text_dim; }
  AdvisorFeatures extract_image_features(const torch::Tensor& image) const override;
  std::vector<torch::Tensor> encode_hoi_prompts(const std::vector<std::string>& phrases) const override;
  uint64_t state_hash() const override;

 private:
  StubProviderOptions options_;
  torch::Tensor projection_;  // (D_a, stats)
  torch::Tensor offset_;      // (D_a)
};

std::shared_ptr<AdvisorProvider> stub_provider(uint64_t seed, int64_t text_dim, int64_t feature_dim = 32);

/// Factory keyed by provider name; only "stub" ships.
std::shared_ptr<AdvisorProvider> make_provider(const std::string& name, uint64_t seed, int64_t text_dim,
                                              int64_t feature_dim = 32);

/// 64-bit FNV-1a.
uint64_t fnv1a(const std::string& text, uint64_t basis = 1469598103934665603ull);

/// "a person <verb> a/an <object>".
std::string hoi_prompt(const std::string& verb, const std::string& object);

/// Mean of each HOI class's prompt-embedding set, (C_HOI, text_dim).
torch::Tensor hoi_text_weights(const AdvisorProvider& provider, const Vocabulary& vocab);

/// Pre-norm advisor layer: positional self-attention, cross-attention to the
/// advisor tokens, verb-box deformable attention over the feature pyramid,
/// feed-forward. Each sub-block is residual.
class VisionAdvisorLayerImpl : public torch::nn::Module {
 public:
  VisionAdvisorLayerImpl(int64_t dim, int64_t heads, int64_t levels, int64_t points, int64_t ffn_hidden);

  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& pos, const torch::Tensor& advisor_tokens,
                        const torch::Tensor& verb_boxes, const MultiScaleFeatures& features, const torch::Tensor& mask);

  MultiHeadAttention self_attn{nullptr};
  MultiHeadAttention token_attn{nullptr};
  BoxDeformableAttention region_attn{nullptr};
  FeedForward ffn{nullptr};
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr}, norm4{nullptr};
};
TORCH_MODULE(VisionAdvisorLayer);

struct AdvisorOptions {
  int64_t dim = 64;
  int64_t heads = 4;
  int64_t layers = 2;
  int64_t levels = 2;
  int64_t points = 4;
  int64_t ffn_hidden = 128;
  int64_t advisor_dim = 32;
  bool box_positional_encoding = true;
};

class VisionAdvisorDecoderImpl : public torch::nn::Module {
 public:
  explicit VisionAdvisorDecoderImpl(const AdvisorOptions& options);

  /// verb_embeddings (B, N, D); advisor_tokens (B, N_ga, D_a), projected to D
  /// here. Returns one (B, N, D) tensor per layer.
  std::vector<torch::Tensor> forward(const torch::Tensor& verb_embeddings, const torch::Tensor& advisor_tokens,
                                     const MultiScaleFeatures& features, const torch::Tensor& verb_boxes,
                                     const torch::Tensor& mask);

  /// Positional term added to queries/keys in self-attention; undefined when
  /// the box encoding is switched off.
  torch::Tensor box_positions(const torch::Tensor& verb_boxes);

  const AdvisorOptions& options() const { return options_; }

  torch::nn::Linear token_proj{nullptr};
  Mlp pos_head{nullptr};
  torch::nn::ModuleList layers;

 private:
  AdvisorOptions options_;
};
TORCH_MODULE(VisionAdvisorDecoder);

struct BridgeOutput {
  torch::Tensor fused;        // E_vt; undefined without verb prediction
  torch::Tensor verb_logits;  // undefined without verb prediction
  torch::Tensor hoi_logits;
};

/// Two-step verb/HOI head. With verb prediction on:
///   E_vt = W [E_v' ; E_va], verb = verb_head(E_vt), hoi = hoi_head(E_vt + E_va).
/// With it off: hoi = hoi_head(E_v' + E_va).
class VHOIBridgeImpl : public torch::nn::Module {
 public:
  VHOIBridgeImpl(int64_t dim, int64_t num_hoi, bool verb_prediction);

  BridgeOutput forward(const torch::Tensor& verb_embeddings, const torch::Tensor& advisor_embeddings,
                       torch::nn::Linear& verb_head);

  /// Copies text-derived weights (C_HOI, D) into the HOI head; bias set to 0.
  void init_hoi_head(const torch::Tensor& text_weights);

  bool verb_prediction() const { return verb_prediction_; }

  torch::nn::Linear projection{nullptr};
  torch::nn::Linear hoi_head{nullptr};

 private:
  bool verb_prediction_;
};
TORCH_MODULE(VHOIBridge);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/advisor.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sovstg {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr int64_t kCellStats = 8;  // mean rgb, std rgb, cell x, cell y

torch::Tensor seeded_normal(std::mt19937_64& rng, std::vector<int64_t> shape, double scale) {
  auto t = torch::empty(shape, torch::kFloat64);
  auto* p = t.data_ptr<double>();
  std::normal_distribution<double> normal(0.0, scale);
  for (int64_t i = 0; i < t.numel(); ++i) p[i] = normal(rng);
  return t;
}

}  // namespace

uint64_t fnv1a(const std::string& text, uint64_t basis) {
  uint64_t h = basis;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

StubProvider::StubProvider(const StubProviderOptions& options) : options_(options) {
  std::mt19937_64 rng(options.seed);
  projection_ = seeded_normal(rng, {options.feature_dim, kCellStats}, 1.0 / std::sqrt(double(kCellStats))).to(torch::kFloat32);
  offset_ = seeded_normal(rng, {options.feature_dim}, 0.1).to(torch::kFloat32);
}

AdvisorFeatures StubProvider::extract_image_features(const torch::Tensor& image) const {
  torch::NoGradGuard no_grad;
  const int64_t g = options_.grid;
  auto x = image.detach().to(torch::kFloat32).unsqueeze(0);
  auto mean = F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions({g, g}));
  auto sq = F::adaptive_avg_pool2d(x * x, F::AdaptiveAvgPool2dFuncOptions({g, g}));
  auto stdev = (sq - mean * mean).clamp_min(0.0).sqrt();
  auto cells = torch::cat({mean, stdev}, 1).squeeze(0).flatten(1).transpose(0, 1);  // (g*g, 6)
  auto coords = (torch::arange(g, torch::kFloat32) + 0.5) / static_cast<double>(g);
  auto grid = torch::meshgrid({coords, coords}, "ij");
  auto pos = torch::stack({grid[1].reshape({-1}), grid[0].reshape({-1})}, 1);
  auto stats = torch::cat({cells, pos}, 1);  // (g*g, 8)
  return AdvisorFeatures{torch::tanh(stats.matmul(projection_.t()) + offset_)};
}

std::vector<torch::Tensor> StubProvider::encode_hoi_prompts(const std::vector<std::string>& phrases) const {
  std::vector<torch::Tensor> out;
  out.reserve(phrases.size());
  for (const auto& phrase : phrases) {
    std::mt19937_64 rng(fnv1a(phrase) ^ (options_.seed * 0x9E3779B97F4A7C15ull));
    out.push_back(seeded_normal(rng, {options_.prompt_set_size, options_.text_dim},
                                1.0 / std::sqrt(static_cast<double>(options_.text_dim)))
                      .to(torch::kFloat32));
  }
  return out;
}

uint64_t StubProvider::state_hash() const {
  uint64_t h = fnv1a(name()) ^ options_.seed;
  for (const auto* t : {&projection_, &offset_}) {
    auto c = t->contiguous();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    std::string raw(reinterpret_cast<const char*>(bytes), c.numel() * c.element_size());
    h = fnv1a(raw, h);
  }
  return h;
}

std::shared_ptr<AdvisorProvider> stub_provider(uint64_t seed, int64_t text_dim, int64_t feature_dim) {
  StubProviderOptions o;
  o.seed = seed;
  o.text_dim = text_dim;
  o.feature_dim = feature_dim;
  return std::make_shared<StubProvider>(o);
}

std::shared_ptr<AdvisorProvider> make_provider(const std::string& name, uint64_t seed, int64_t text_dim,
                                              int64_t feature_dim) {
  if (name == "stub") return stub_provider(seed, text_dim, feature_dim);
  throw std::invalid_argument("unknown advisor provider '" + name + "'");
}

std::string hoi_prompt(const std::string& verb, const std::string& object) {
  const bool vowel = !object.empty() && std::string("aeiou").find(object.front()) != std::string::npos;
  return "a person " + verb + (vowel ? " an " : " a ") + object;
}

torch::Tensor hoi_text_weights(const AdvisorProvider& provider, const Vocabulary& vocab) {
  std::vector<std::string> phrases;
  phrases.reserve(vocab.hoi_classes.size());
  for (const auto& [object, verb] : vocab.hoi_classes) {
    phrases.push_back(hoi_prompt(vocab.verbs.at(verb), vocab.objects.at(object)));
  }
  auto sets = provider.encode_hoi_prompts(phrases);
  std::vector<torch::Tensor> rows;
  rows.reserve(sets.size());
  for (const auto& s : sets) rows.push_back(s.mean(0));
  if (rows.empty()) return torch::zeros({0, provider.text_dim()});
  return torch::stack(rows, 0);
}

VisionAdvisorLayerImpl::VisionAdvisorLayerImpl(int64_t dim, int64_t heads, int64_t levels, int64_t points,
                                               int64_t ffn_hidden) {
  self_attn = register_module("self_attn", MultiHeadAttention(dim, heads));
  token_attn = register_module("token_attn", MultiHeadAttention(dim, heads));
  region_attn = register_module("region_attn", BoxDeformableAttention(dim, heads, levels, points));
  ffn = register_module("ffn", FeedForward(dim, ffn_hidden));
  norm1 = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({dim})));
  norm3 = register_module("norm3", nn::LayerNorm(nn::LayerNormOptions({dim})));
  norm4 = register_module("norm4", nn::LayerNorm(nn::LayerNormOptions({dim})));
}

torch::Tensor VisionAdvisorLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& pos,
                                              const torch::Tensor& advisor_tokens, const torch::Tensor& verb_boxes,
                                              const MultiScaleFeatures& features, const torch::Tensor& mask) {
  auto h = norm1(x);
  auto qk = pos.defined() ? h + pos : h;
  auto y = x + self_attn(qk, qk, h, mask);
  y = y + token_attn(norm2(y), advisor_tokens, advisor_tokens);
  y = y + region_attn(norm3(y), verb_boxes, features);
  return y + ffn(norm4(y));
}

VisionAdvisorDecoderImpl::VisionAdvisorDecoderImpl(const AdvisorOptions& o) : options_(o) {
  token_proj = register_module("token_proj", nn::Linear(o.advisor_dim, o.dim));
  pos_head = register_module("pos_head", Mlp(o.dim, o.dim, o.dim, 2));
  layers = register_module("layers", nn::ModuleList());
  for (int64_t l = 0; l < o.layers; ++l) {
    layers->push_back(VisionAdvisorLayer(o.dim, o.heads, o.levels, o.points, o.ffn_hidden));
  }
}

torch::Tensor VisionAdvisorDecoderImpl::box_positions(const torch::Tensor& verb_boxes) {
  if (!options_.box_positional_encoding) return {};
  return pos_head(positional_encode_boxes(verb_boxes, options_.dim));
}

std::vector<torch::Tensor> VisionAdvisorDecoderImpl::forward(const torch::Tensor& verb_embeddings,
                                                             const torch::Tensor& advisor_tokens,
                                                             const MultiScaleFeatures& features,
                                                             const torch::Tensor& verb_boxes, const torch::Tensor& mask) {
  if (!advisor_tokens.defined() || advisor_tokens.numel() == 0) {
    throw std::invalid_argument("vision advisor needs image-level advisor features");
  }
  if (advisor_tokens.size(-1) != options_.advisor_dim) {
    throw std::invalid_argument("advisor feature width does not match the configured width");
  }
  auto tokens = token_proj(advisor_tokens);
  auto pos = box_positions(verb_boxes);
  std::vector<torch::Tensor> out;
  auto x = verb_embeddings;
  for (const auto& layer : *layers) {
    x = layer->as<VisionAdvisorLayer>()->forward(x, pos, tokens, verb_boxes, features, mask);
    out.push_back(x);
  }
  return out;
}

VHOIBridgeImpl::VHOIBridgeImpl(int64_t dim, int64_t num_hoi, bool verb_prediction)
    : verb_prediction_(verb_prediction) {
  projection = register_module("projection", nn::Linear(2 * dim, dim));
  hoi_head = register_module("hoi_head", nn::Linear(dim, num_hoi));
}

BridgeOutput VHOIBridgeImpl::forward(const torch::Tensor& verb_embeddings, const torch::Tensor& advisor_embeddings,
                                     nn::Linear& verb_head) {
  if (!verb_embeddings.sizes().equals(advisor_embeddings.sizes())) {
    throw std::invalid_argument("verb and advisor embeddings must align per query");
  }
  BridgeOutput out;
  if (!verb_prediction_) {
    out.hoi_logits = hoi_head(verb_embeddings + advisor_embeddings);
    return out;
  }
  out.fused = projection(torch::cat({verb_embeddings, advisor_embeddings}, -1));
  out.verb_logits = verb_head(out.fused);
  out.hoi_logits = hoi_head(out.fused + advisor_embeddings);
  return out;
}

void VHOIBridgeImpl::init_hoi_head(const torch::Tensor& text_weights) {
  if (!text_weights.sizes().equals(hoi_head->weight.sizes())) {
    throw std::invalid_argument("text weights must be (num_hoi, dim)");
  }
  torch::NoGradGuard no_grad;
  hoi_head->weight.copy_(text_weights);
  hoi_head->bias.zero_();
}

}  // namespace sovstg

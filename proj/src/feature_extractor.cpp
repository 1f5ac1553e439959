// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/feature_extractor.hpp"

#include <stdexcept>

namespace sovstg {

namespace nn = torch::nn;

EncoderLayerImpl::EncoderLayerImpl(int64_t dim, int64_t heads, int64_t hidden) {
  attn = register_module("attn", MultiHeadAttention(dim, heads));
  ffn = register_module("ffn", FeedForward(dim, hidden));
  norm1 = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({dim})));
  norm2 = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({dim})));
}

torch::Tensor EncoderLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& pos) {
  auto qk = x + pos;
  auto y = norm1(x + attn(qk, qk, x));
  return norm2(y + ffn(y));
}

ToyFeatureExtractorImpl::ToyFeatureExtractorImpl(const ExtractorOptions& options) : options_(options) {
  if (options.levels < 1 || options.levels > 3) throw std::invalid_argument("extractor supports 1 to 3 levels");
  const int64_t c = options.channels;
  stem = register_module("stem", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, c, 3).stride(2).padding(1)),
                                                nn::ReLU(),
                                                nn::Conv2d(nn::Conv2dOptions(c, 2 * c, 3).stride(2).padding(1)),
                                                nn::ReLU()));
  downs = register_module("downs", nn::ModuleList());
  for (int64_t l = 1; l < options.levels; ++l) {
    downs->push_back(nn::Sequential(nn::Conv2d(nn::Conv2dOptions(2 * c, 2 * c, 3).stride(2).padding(1)), nn::ReLU()));
  }
  projections = register_module("projections", nn::ModuleList());
  norms = register_module("norms", nn::ModuleList());
  const int64_t groups = options.dim % 8 == 0 ? 8 : 1;
  for (int64_t l = 0; l < options.levels; ++l) {
    projections->push_back(nn::Conv2d(nn::Conv2dOptions(2 * c, options.dim, 1)));
    norms->push_back(nn::GroupNorm(nn::GroupNormOptions(groups, options.dim)));
  }
  encoder = register_module("encoder", nn::ModuleList());
  for (int64_t i = 0; i < options.encoder_layers; ++i) {
    encoder->push_back(EncoderLayer(options.dim, options.heads, 2 * options.dim));
  }
}

MultiScaleFeatures ToyFeatureExtractorImpl::forward(const torch::Tensor& images) {
  MultiScaleFeatures out;
  auto x = stem->forward(images);
  std::vector<torch::Tensor> raw{x};
  for (size_t i = 0; i < downs->size(); ++i) {
    x = downs[i]->as<nn::Sequential>()->forward(x);
    raw.push_back(x);
  }
  for (int64_t l = 0; l < options_.levels; ++l) {
    auto f = projections[l]->as<nn::Conv2d>()->forward(raw[l]);
    out.levels.push_back(norms[l]->as<nn::GroupNorm>()->forward(f));
    out.strides.push_back(int64_t{4} << l);
  }
  if (!encoder->is_empty()) {
    auto& coarse = out.levels.back();
    const int64_t b = coarse.size(0);
    const int64_t d = coarse.size(1);
    const int64_t h = coarse.size(2);
    const int64_t w = coarse.size(3);
    auto tokens = coarse.flatten(2).transpose(1, 2);
    auto pos = positional_encode_grid(h, w, d).to(tokens.options()).unsqueeze(0);
    for (const auto& layer : *encoder) tokens = layer->as<EncoderLayer>()->forward(tokens, pos);
    coarse = tokens.transpose(1, 2).reshape({b, d, h, w});
  }
  return out;
}

}  // namespace sovstg

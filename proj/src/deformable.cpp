// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/deformable.hpp"

#include <cmath>
#include <stdexcept>

namespace sovstg {

namespace F = torch::nn::functional;
using torch::indexing::Ellipsis;
using torch::indexing::Slice;

BoxDeformableAttentionImpl::BoxDeformableAttentionImpl(int64_t dim, int64_t heads, int64_t levels, int64_t points)
    : dim_(dim), heads_(heads), levels_(levels), points_(points) {
  if (dim % heads != 0) throw std::invalid_argument("deformable attention width must divide into heads");
  offset_proj = register_module("offset_proj", torch::nn::Linear(dim, heads * levels * points * 2));
  weight_proj = register_module("weight_proj", torch::nn::Linear(dim, heads * levels * points));
  value_proj = register_module("value_proj", torch::nn::Linear(dim, dim));
  output_proj = register_module("output_proj", torch::nn::Linear(dim, dim));

  // Offsets start on a per-head ray, spreading points from the centre towards
  // the box edge.
  torch::NoGradGuard no_grad;
  torch::nn::init::zeros_(offset_proj->weight);
  auto bias = torch::zeros({heads, levels, points, 2});
  for (int64_t h = 0; h < heads; ++h) {
    const double theta = 2.0 * M_PI * static_cast<double>(h) / static_cast<double>(heads);
    double dx = std::cos(theta);
    double dy = std::sin(theta);
    const double scale = std::max(std::abs(dx), std::abs(dy));
    dx /= scale;
    dy /= scale;
    for (int64_t l = 0; l < levels; ++l)
      for (int64_t p = 0; p < points; ++p) {
        const double r = static_cast<double>(p + 1) / static_cast<double>(points);
        bias[h][l][p][0] = dx * r;
        bias[h][l][p][1] = dy * r;
      }
  }
  offset_proj->bias.copy_(bias.view({-1}));
  torch::nn::init::zeros_(weight_proj->weight);
  torch::nn::init::zeros_(weight_proj->bias);
  torch::nn::init::xavier_uniform_(value_proj->weight);
  torch::nn::init::zeros_(value_proj->bias);
  torch::nn::init::xavier_uniform_(output_proj->weight);
  torch::nn::init::zeros_(output_proj->bias);
}

torch::Tensor BoxDeformableAttentionImpl::sampling_locations(const torch::Tensor& query, const torch::Tensor& boxes) {
  const int64_t batch = query.size(0);
  const int64_t n = query.size(1);
  auto offsets = offset_proj(query).view({batch, n, heads_, levels_, points_, 2});
  auto center = boxes.index({Ellipsis, Slice(0, 2)}).view({batch, n, 1, 1, 1, 2});
  auto half = 0.5 * boxes.index({Ellipsis, Slice(2, 4)}).view({batch, n, 1, 1, 1, 2});
  return center + offsets * half;
}

torch::Tensor BoxDeformableAttentionImpl::attention_weights(const torch::Tensor& query) {
  const int64_t batch = query.size(0);
  const int64_t n = query.size(1);
  auto logits = weight_proj(query).view({batch, n, heads_, levels_ * points_});
  return torch::softmax(logits, -1).view({batch, n, heads_, levels_, points_});
}

torch::Tensor bilinear_sample(const torch::Tensor& map, const torch::Tensor& locations) {
  auto grid = 2.0 * locations - 1.0;
  return F::grid_sample(map, grid,
                        F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kZeros).align_corners(false));
}

torch::Tensor BoxDeformableAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& boxes,
                                                  const MultiScaleFeatures& features) {
  if (features.num_levels() != levels_) {
    throw std::invalid_argument("deformable attention expects " + std::to_string(levels_) + " feature levels");
  }
  if (boxes.size(0) != query.size(0) || boxes.size(1) != query.size(1)) {
    throw std::invalid_argument("one box per query is required");
  }
  const int64_t batch = query.size(0);
  const int64_t n = query.size(1);
  const int64_t head_dim = dim_ / heads_;

  auto locations = sampling_locations(query, boxes);  // (B, N, H, L, P, 2)
  auto weights = attention_weights(query);            // (B, N, H, L, P)

  std::vector<torch::Tensor> per_level;
  per_level.reserve(levels_);
  for (int64_t l = 0; l < levels_; ++l) {
    const auto& feat = features.levels[l];
    const int64_t h = feat.size(2);
    const int64_t w = feat.size(3);
    auto value = value_proj(feat.flatten(2).transpose(1, 2));  // (B, HW, D)
    value = value.view({batch, h * w, heads_, head_dim}).permute({0, 2, 3, 1}).reshape({batch * heads_, head_dim, h, w});
    auto loc = locations.select(3, l).permute({0, 2, 1, 3, 4}).reshape({batch * heads_, n, points_, 2});
    per_level.push_back(bilinear_sample(value, loc));  // (B*H, Dh, N, P)
  }
  auto sampled = torch::stack(per_level, 3);  // (B*H, Dh, N, L, P)
  auto w = weights.permute({0, 2, 1, 3, 4}).reshape({batch * heads_, 1, n, levels_, points_});
  auto out = (sampled * w).sum({3, 4});  // (B*H, Dh, N)
  out = out.view({batch, heads_, head_dim, n}).permute({0, 3, 1, 2}).reshape({batch, n, dim_});
  return output_proj(out);
}

}  // namespace sovstg

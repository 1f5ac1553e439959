// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace sovstg {

/// Feature pyramid handed to every decoder. Each level is (B, D, H_l, W_l);
/// strides are in input pixels.
struct MultiScaleFeatures {
  std::vector<torch::Tensor> levels;
  std::vector<int64_t> strides;

  int64_t num_levels() const { return static_cast<int64_t>(levels.size()); }
  int64_t batch() const { return levels.empty() ? 0 : levels.front().size(0); }
  int64_t dim() const { return levels.empty() ? 0 : levels.front().size(1); }
};

/// Multi-scale deformable cross-attention whose sampling points are placed
/// relative to a box: location = centre + offset * size / 2, per head, level
/// and point. Attention weights are normalised jointly over levels and points.
class BoxDeformableAttentionImpl : public torch::nn::Module {
 public:
  BoxDeformableAttentionImpl(int64_t dim, int64_t heads, int64_t levels, int64_t points);

  /// query (B, N, D), boxes (B, N, 4) in (cx, cy, w, h) -> (B, N, D).
  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& boxes, const MultiScaleFeatures& features);

  /// Absolute sampling locations (B, N, heads, levels, points, 2) in [0,1]
  /// image coordinates (x, y).
  torch::Tensor sampling_locations(const torch::Tensor& query, const torch::Tensor& boxes);

  /// Normalised attention weights (B, N, heads, levels, points).
  torch::Tensor attention_weights(const torch::Tensor& query);

  int64_t heads() const { return heads_; }
  int64_t levels() const { return levels_; }
  int64_t points() const { return points_; }

  torch::nn::Linear offset_proj{nullptr}, weight_proj{nullptr}, value_proj{nullptr}, output_proj{nullptr};

 private:
  int64_t dim_;
  int64_t heads_;
  int64_t levels_;
  int64_t points_;
};
TORCH_MODULE(BoxDeformableAttention);

/// Bilinear read of a (B, C, H, W) map at normalised (x, y) locations
/// (B, N, P, 2) -> (B, C, N, P). Pixel centres sit at (i + 0.5) / W; reads
/// outside the map see zeros.
torch::Tensor bilinear_sample(const torch::Tensor& map, const torch::Tensor& locations);

}  // namespace sovstg

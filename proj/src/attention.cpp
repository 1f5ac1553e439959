// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sovstg {

MultiHeadAttentionImpl::MultiHeadAttentionImpl(int64_t dim, int64_t heads) : dim_(dim), heads_(heads) {
  if (dim % heads != 0) throw std::invalid_argument("attention width must divide evenly into heads");
  q_proj = register_module("q_proj", torch::nn::Linear(dim, dim));
  k_proj = register_module("k_proj", torch::nn::Linear(dim, dim));
  v_proj = register_module("v_proj", torch::nn::Linear(dim, dim));
  out_proj = register_module("out_proj", torch::nn::Linear(dim, dim));
  for (auto* lin : {&q_proj, &k_proj, &v_proj, &out_proj}) {
    torch::nn::init::xavier_uniform_((*lin)->weight);
    torch::nn::init::zeros_((*lin)->bias);
  }
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& key,
                                              const torch::Tensor& value, const torch::Tensor& mask) {
  const int64_t batch = query.size(0);
  const int64_t nq = query.size(1);
  const int64_t head_dim = dim_ / heads_;
  auto k_in = key.dim() == 2 ? key.unsqueeze(0).expand({batch, key.size(0), key.size(1)}) : key;
  auto v_in = value.dim() == 2 ? value.unsqueeze(0).expand({batch, value.size(0), value.size(1)}) : value;
  const int64_t nk = k_in.size(1);

  auto q = q_proj(query).view({batch, nq, heads_, head_dim}).transpose(1, 2);
  auto k = k_proj(k_in).view({batch, nk, heads_, head_dim}).transpose(1, 2);
  auto v = v_proj(v_in).view({batch, nk, heads_, head_dim}).transpose(1, 2);

  auto scores = q.matmul(k.transpose(-2, -1)) / std::sqrt(static_cast<double>(head_dim));
  if (mask.defined()) {
    auto allowed = mask.dim() == 2 ? mask.view({1, 1, nq, nk}) : mask.view({batch, 1, nq, nk});
    scores = scores.masked_fill(allowed.logical_not(), -std::numeric_limits<double>::infinity());
  }
  auto weights = torch::softmax(scores, -1);
  auto out = weights.matmul(v).transpose(1, 2).reshape({batch, nq, dim_});
  return out_proj(out);
}

FeedForwardImpl::FeedForwardImpl(int64_t dim, int64_t hidden) {
  fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
}

torch::Tensor FeedForwardImpl::forward(const torch::Tensor& x) { return fc2(torch::relu(fc1(x))); }

MlpImpl::MlpImpl(int64_t in, int64_t hidden, int64_t out, int64_t num_layers) {
  layers = register_module("layers", torch::nn::ModuleList());
  for (int64_t i = 0; i < num_layers; ++i) {
    const int64_t a = i == 0 ? in : hidden;
    const int64_t b = i + 1 == num_layers ? out : hidden;
    layers->push_back(torch::nn::Linear(a, b));
  }
}

torch::Tensor MlpImpl::forward(torch::Tensor x) {
  const auto n = layers->size();
  for (size_t i = 0; i < n; ++i) {
    x = layers[i]->as<torch::nn::Linear>()->forward(x);
    if (i + 1 < n) x = torch::relu(x);
  }
  return x;
}

namespace {

torch::Tensor frequency_table(int64_t per_coord, double temperature, torch::TensorOptions options) {
  auto idx = torch::arange(per_coord, options);
  auto pair = torch::floor(idx / 2.0) * 2.0;
  return torch::pow(temperature, pair / static_cast<double>(per_coord));
}

// Interleaves sin on even slots and cos on odd slots.
torch::Tensor encode_scalar(const torch::Tensor& coord, const torch::Tensor& freqs) {
  auto phase = coord.unsqueeze(-1) * (2.0 * M_PI) / freqs;
  auto even = torch::arange(freqs.size(0), torch::TensorOptions().dtype(torch::kInt64)).remainder(2).eq(0);
  return torch::where(even, torch::sin(phase), torch::cos(phase));
}

}  // namespace

torch::Tensor positional_encode_boxes(const torch::Tensor& boxes, int64_t dim, double temperature) {
  if (dim % 4 != 0) throw std::invalid_argument("box positional encoding width must be a multiple of 4");
  const int64_t per_coord = dim / 4;
  auto freqs = frequency_table(per_coord, temperature, boxes.options());
  std::vector<torch::Tensor> parts;
  parts.reserve(4);
  for (int64_t c = 0; c < 4; ++c) parts.push_back(encode_scalar(boxes.select(-1, c), freqs));
  return torch::cat(parts, -1);
}

torch::Tensor positional_encode_box(const Box& box, int64_t dim, double temperature) {
  auto t = torch::tensor({box.cx, box.cy, box.w, box.h}, torch::kFloat64);
  return positional_encode_boxes(t, dim, temperature);
}

torch::Tensor positional_encode_grid(int64_t height, int64_t width, int64_t dim, double temperature) {
  if (dim % 2 != 0) throw std::invalid_argument("grid positional encoding width must be even");
  const int64_t per_axis = dim / 2;
  auto opts = torch::TensorOptions().dtype(torch::kFloat32);
  auto freqs = frequency_table(per_axis, temperature, opts);
  auto ys = (torch::arange(height, opts) + 0.5) / static_cast<double>(height);
  auto xs = (torch::arange(width, opts) + 0.5) / static_cast<double>(width);
  auto grid = torch::meshgrid({ys, xs}, "ij");
  auto ey = encode_scalar(grid[0].reshape({-1}), freqs);
  auto ex = encode_scalar(grid[1].reshape({-1}), freqs);
  return torch::cat({ex, ey}, -1);
}

}  // namespace sovstg

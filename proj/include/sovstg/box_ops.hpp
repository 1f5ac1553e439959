// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "sovstg/geometry.hpp"

// Differentiable batched box arithmetic. Tensors hold boxes along the last
// dimension in (cx, cy, w, h) order unless the name says xyxy.
namespace sovstg::box_ops {

enum class VerbBoxKind { kObject, kSubject, kMbr, kSmbr, kAsmbr };

VerbBoxKind parse_verb_box_kind(const std::string& name);
std::string to_string(VerbBoxKind kind);

torch::Tensor cxcywh_to_xyxy(const torch::Tensor& boxes);
torch::Tensor xyxy_to_cxcywh(const torch::Tensor& boxes);

torch::Tensor inverse_sigmoid(const torch::Tensor& x, double eps = 1e-5);

/// Element-wise generalized IoU of two equally-shaped box tensors.
torch::Tensor elementwise_giou(const torch::Tensor& a, const torch::Tensor& b);

/// Pairwise generalized IoU: a (N,4), b (M,4) -> (N,M).
torch::Tensor pairwise_giou(const torch::Tensor& a, const torch::Tensor& b);

torch::Tensor mbr(const torch::Tensor& subject, const torch::Tensor& object);
torch::Tensor smbr(const torch::Tensor& subject, const torch::Tensor& object);
torch::Tensor asmbr(const torch::Tensor& subject, const torch::Tensor& object);

/// Verb region for the requested ablation variant.
torch::Tensor verb_box(VerbBoxKind kind, const torch::Tensor& subject, const torch::Tensor& object);

torch::Tensor to_tensor(const std::vector<Box>& boxes, torch::ScalarType dtype = torch::kFloat32);
std::vector<Box> to_boxes(const torch::Tensor& boxes);

}  // namespace sovstg::box_ops

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <map>
#include <string>
#include <vector>

#include "sovstg/denoising.hpp"
#include "sovstg/matching.hpp"
#include "sovstg/model.hpp"
#include "sovstg/types.hpp"

namespace sovstg {

/// Ground truth of one image as tensors.
struct ImageTargets {
  torch::Tensor subject;       // (K, 4)
  torch::Tensor object;        // (K, 4)
  torch::Tensor object_class;  // (K) int64
  torch::Tensor verbs;         // (K, C_v) 0/1
  torch::Tensor hoi;           // (K, C_hoi) 0/1

  int64_t size() const { return object_class.size(0); }
};

ImageTargets make_targets(const ImageAnnotation& image, const Vocabulary& vocab,
                          torch::ScalarType dtype = torch::kFloat32);

/// Weighted loss terms ("object", "verb", "hoi", "l1", "giou") and their sum.
struct LossBreakdown {
  torch::Tensor total;
  std::map<std::string, torch::Tensor> terms;

  double value(const std::string& name) const;
};

/// Sigmoid focal loss summed over all elements, weighted per row by
/// `row_weight` (broadcast over the class dimension) when defined.
torch::Tensor sigmoid_focal_loss(const torch::Tensor& logits, const torch::Tensor& targets, double alpha,
                                 double gamma, const torch::Tensor& row_weight = {});

/// Pairwise matching costs for every image of a batch at one decoder layer;
/// returns one (N_q, K_b) matrix per image.
std::vector<torch::Tensor> match_costs(const ModelOutput& out, int64_t layer, const std::vector<ImageTargets>& targets,
                                       const LossWeights& w);

/// Hungarian assignment per layer and image: result[layer][image].
std::vector<std::vector<MatchResult>> match_batch(const ModelOutput& out, const std::vector<ImageTargets>& targets,
                                                  const LossWeights& w);

/// Set-prediction loss for the inference queries, summed over all decoder
/// layers and normalised by the number of ground truths in the batch.
/// Unmatched queries are pushed to all-zero class targets.
LossBreakdown compute_losses(const ModelOutput& out, const std::vector<ImageTargets>& targets,
                             const std::vector<std::vector<MatchResult>>& matches, const LossWeights& w);

/// Same terms for the denoising rows, assigned through their fixed
/// ground-truth index and normalised by the number of valid rows. Padded rows
/// are ignored. Throws std::out_of_range on an invalid index.
LossBreakdown dn_losses(const ModelOutput& dn_out, const std::vector<ImageTargets>& targets,
                        const torch::Tensor& gt_index, const torch::Tensor& valid, const LossWeights& w);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "sovstg/geometry.hpp"
#include "sovstg/types.hpp"

namespace sovstg {

/// Query-to-ground-truth assignment. Queries absent from `pairs` are
/// background.
struct MatchResult {
  std::vector<std::pair<int64_t, int64_t>> pairs;  // (query, gt), sorted by query
  double total_cost = 0.0;
};

/// Minimum-cost one-to-one assignment of every column (ground truth) to a
/// distinct row (query) of an (N_q, K) cost matrix. Throws
/// std::invalid_argument when K > N_q or a cost is not finite.
MatchResult hungarian_match(const std::vector<std::vector<double>>& cost);
MatchResult hungarian_match(const torch::Tensor& cost);

struct LossWeights {
  double object = 1.0;
  double verb = 1.0;
  double hoi = 1.0;
  double l1 = 5.0;
  double giou = 2.0;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

/// Probabilities and boxes of one prediction, for scalar cost evaluation.
struct PredictionView {
  Box subject;
  Box object;
  std::vector<double> object_probs;
  std::vector<double> verb_probs;
  std::vector<double> hoi_probs;  // empty when HOI scores are not predicted
};

/// Matching cost of one prediction against one ground truth:
///   -w_obj * p(object class) + w_verb * verb score cost [+ w_hoi * hoi cost]
///   + w_l1 * (L1_s + L1_o) - w_giou * (GIoU_s + GIoU_o).
double hoi_match_cost(const PredictionView& prediction, const HOIInstance& gt, const LossWeights& w,
                      const std::vector<uint8_t>& gt_hoi = {});

/// Multi-label score cost: -(mean prob over positives + mean (1-prob) over
/// negatives) / 2. Empty sides contribute zero.
double multilabel_score_cost(const std::vector<double>& probs, const std::vector<uint8_t>& target);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <random>
#include <vector>

#include "sovstg/label_priors.hpp"
#include "sovstg/types.hpp"

namespace sovstg {

struct DNConfig {
  double object_flip_rate = 0.3;  // eta_o
  double verb_noise_rate = 0.3;   // eta_v: chance a verb label is noised at all
  double verb_flip_rate = 0.4;    // lambda_v: per-class flip-on chance within a noised label
  double box_noise = 0.4;         // delta_b
  int64_t groups = 3;             // N_p, groups per kind per instance

  /// Throws std::invalid_argument when a rate is outside [0,1] or groups < 1.
  void validate() const;
};

int64_t flip_object_label(int64_t gt_class, double flip_rate, int64_t num_classes, std::mt19937_64& rng);

/// Ground-truth bits are always kept; only non-ground-truth bits can turn on.
std::vector<uint8_t> flip_verb_label(const std::vector<uint8_t>& gt, double noise_rate, double class_flip_rate,
                                     std::mt19937_64& rng);

/// Denoising queries for one image. Instance k owns rows
/// [2*N_p*k, 2*N_p*k + N_p) (object-noised) followed by N_p verb-noised rows.
struct DNGroupBatch {
  int64_t num_queries = 0;  // N_q, inference queries preceding the DN block in the mask
  int64_t groups = 0;       // N_p
  int64_t num_instances = 0;
  torch::Tensor queries;    // (2*N_p*K, D)
  std::vector<Box> subject_anchors;
  std::vector<Box> object_anchors;
  std::vector<int64_t> gt_index;
  std::vector<int64_t> noised_objects;             // object label per row (-1 on verb-noised rows)
  std::vector<std::vector<uint8_t>> noised_verbs;  // verb multi-hot per row (empty on object-noised rows)
  torch::Tensor mask;                              // bool, (N_q + 2*N_p*K)^2, true = may attend

  int64_t size() const { return static_cast<int64_t>(gt_index.size()); }
};

DNGroupBatch build_dn_queries(const std::vector<HOIInstance>& gts, const LabelEmbeddingBank& bank,
                              const DNConfig& cfg, int64_t num_queries, std::mt19937_64& rng);

/// Square mask over [inference | DN]. Inference rows see inference columns
/// only. A DN row sees the inference block plus its own group, where group
/// (k, j) holds the j-th object-noised and j-th verb-noised row of instance k.
torch::Tensor build_attention_mask(int64_t num_queries, int64_t num_instances, int64_t groups);

/// DN blocks of a batch padded to a common length. Padded rows are invalid,
/// attend only to themselves and are never attended to.
struct PaddedDN {
  torch::Tensor queries;          // (B, M, D)
  torch::Tensor subject_anchors;  // (B, M, 4)
  torch::Tensor object_anchors;   // (B, M, 4)
  torch::Tensor valid;            // (B, M) bool
  torch::Tensor gt_index;         // (B, M) int64, -1 on padding
  torch::Tensor mask;             // (B, N_q + M, N_q + M) bool

  int64_t length() const { return queries.defined() ? queries.size(1) : 0; }
};

PaddedDN pad_dn_batches(const std::vector<DNGroupBatch>& batches, int64_t num_queries, int64_t dim,
                        torch::TensorOptions options);

/// Mask for a batch with no denoising block.
torch::Tensor inference_only_mask(int64_t batch, int64_t num_queries);

}  // namespace sovstg

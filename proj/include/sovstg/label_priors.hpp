// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace sovstg {

/// Learnable object and verb label priors. One instance is shared by the
/// query initializer, the denoising encoder and the subject-object fusion.
class LabelEmbeddingBankImpl : public torch::nn::Module {
 public:
  LabelEmbeddingBankImpl(int64_t num_objects, int64_t num_verbs, int64_t dim);

  int64_t num_objects() const { return num_objects_; }
  int64_t num_verbs() const { return num_verbs_; }
  int64_t dim() const { return dim_; }

  torch::Tensor object_priors;  // (C_o, D)
  torch::Tensor verb_priors;    // (C_v, D)

 private:
  int64_t num_objects_;
  int64_t num_verbs_;
  int64_t dim_;
};
TORCH_MODULE(LabelEmbeddingBank);

/// Per-query mixing weights over the label priors.
class CoefficientMatricesImpl : public torch::nn::Module {
 public:
  CoefficientMatricesImpl(int64_t num_queries, int64_t num_objects, int64_t num_verbs);

  int64_t num_queries() const { return object_coeffs.size(0); }

  torch::Tensor object_coeffs;  // (N_q, C_o)
  torch::Tensor verb_coeffs;    // (N_q, C_v)
};
TORCH_MODULE(CoefficientMatrices);

/// q_ov = A_o t_o + A_v t_v, recomputed from the live parameters.
/// Throws std::invalid_argument on a class-count mismatch.
torch::Tensor init_inference_queries(const LabelEmbeddingBank& bank, const CoefficientMatrices& coeffs);

torch::Tensor select_object_vector(const LabelEmbeddingBank& bank, int64_t class_index);

/// Sum of the verb prior rows named in `verbs`. Empty or out-of-range sets throw.
torch::Tensor encode_verb_multilabel(const LabelEmbeddingBank& bank, const std::vector<int64_t>& verbs);

/// Batched form of encode_verb_multilabel: rows of a (M, C_v) 0/1 matrix.
torch::Tensor encode_verb_multihot(const LabelEmbeddingBank& bank, const torch::Tensor& multihot);

}  // namespace sovstg

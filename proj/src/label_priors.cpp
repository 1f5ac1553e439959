// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/label_priors.hpp"

#include <stdexcept>
#include <string>

namespace sovstg {

namespace {
constexpr double kPriorInitStd = 0.02;
}

LabelEmbeddingBankImpl::LabelEmbeddingBankImpl(int64_t num_objects, int64_t num_verbs, int64_t dim)
    : num_objects_(num_objects), num_verbs_(num_verbs), dim_(dim) {
  if (num_objects < 1 || num_verbs < 1 || dim < 1) {
    throw std::invalid_argument("label bank needs positive class counts and width");
  }
  object_priors = register_parameter("object_priors", torch::randn({num_objects, dim}) * kPriorInitStd);
  verb_priors = register_parameter("verb_priors", torch::randn({num_verbs, dim}) * kPriorInitStd);
}

CoefficientMatricesImpl::CoefficientMatricesImpl(int64_t num_queries, int64_t num_objects, int64_t num_verbs) {
  object_coeffs = register_parameter("object_coeffs", torch::randn({num_queries, num_objects}) * kPriorInitStd);
  verb_coeffs = register_parameter("verb_coeffs", torch::randn({num_queries, num_verbs}) * kPriorInitStd);
}

torch::Tensor init_inference_queries(const LabelEmbeddingBank& bank, const CoefficientMatrices& coeffs) {
  if (coeffs->object_coeffs.size(1) != bank->object_priors.size(0) ||
      coeffs->verb_coeffs.size(1) != bank->verb_priors.size(0)) {
    throw std::invalid_argument("coefficient matrices do not match the label bank class counts");
  }
  return coeffs->object_coeffs.matmul(bank->object_priors) + coeffs->verb_coeffs.matmul(bank->verb_priors);
}

torch::Tensor select_object_vector(const LabelEmbeddingBank& bank, int64_t class_index) {
  if (class_index < 0 || class_index >= bank->num_objects()) {
    throw std::out_of_range("object class " + std::to_string(class_index) + " out of range");
  }
  return bank->object_priors[class_index];
}

torch::Tensor encode_verb_multilabel(const LabelEmbeddingBank& bank, const std::vector<int64_t>& verbs) {
  if (verbs.empty()) throw std::invalid_argument("verb label set is empty");
  auto multihot = torch::zeros({1, bank->num_verbs()}, bank->verb_priors.options().requires_grad(false));
  for (auto v : verbs) {
    if (v < 0 || v >= bank->num_verbs()) {
      throw std::out_of_range("verb class " + std::to_string(v) + " out of range");
    }
    multihot[0][v] = 1.0;
  }
  return encode_verb_multihot(bank, multihot).squeeze(0);
}

torch::Tensor encode_verb_multihot(const LabelEmbeddingBank& bank, const torch::Tensor& multihot) {
  if (multihot.dim() != 2 || multihot.size(1) != bank->num_verbs()) {
    throw std::invalid_argument("verb multi-hot width does not match the label bank");
  }
  return multihot.to(bank->verb_priors.scalar_type()).matmul(bank->verb_priors);
}

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "sovstg/label_priors.hpp"
#include "sovstg/model.hpp"

namespace sovstg {
namespace {

TEST(LabelPriors, ShapesAndInitScale) {
  torch::manual_seed(0);
  LabelEmbeddingBank bank(6, 5, 64);
  CoefficientMatrices coeffs(16, 6, 5);
  EXPECT_EQ(bank->object_priors.sizes(), (std::vector<int64_t>{6, 64}));
  EXPECT_EQ(bank->verb_priors.sizes(), (std::vector<int64_t>{5, 64}));
  EXPECT_EQ(coeffs->object_coeffs.sizes(), (std::vector<int64_t>{16, 6}));
  EXPECT_EQ(coeffs->verb_coeffs.sizes(), (std::vector<int64_t>{16, 5}));
  EXPECT_TRUE(torch::isfinite(bank->object_priors).all().item<bool>());
  const double std = bank->object_priors.std().item<double>();
  EXPECT_GT(std, 0.01);
  EXPECT_LT(std, 0.03);
}

TEST(LabelPriors, QueryInitSelectionAndZero) {
  LabelEmbeddingBank bank(3, 2, 4);
  CoefficientMatrices coeffs(2, 3, 2);
  torch::NoGradGuard no_grad;
  coeffs->object_coeffs.zero_();
  coeffs->verb_coeffs.zero_();
  EXPECT_TRUE(torch::equal(init_inference_queries(bank, coeffs), torch::zeros({2, 4})));
  coeffs->object_coeffs[1][2] = 1.0;
  auto q = init_inference_queries(bank, coeffs);
  EXPECT_TRUE(torch::equal(q[1], bank->object_priors[2]));
}

TEST(LabelPriors, QueryInitMatchesMatrixProductOracle) {
  torch::manual_seed(3);
  LabelEmbeddingBank bank(4, 3, 3);
  CoefficientMatrices coeffs(2, 4, 3);
  auto q = init_inference_queries(bank, coeffs);
  const auto co = coeffs->object_coeffs.to(torch::kFloat64), cv = coeffs->verb_coeffs.to(torch::kFloat64);
  const auto po = bank->object_priors.to(torch::kFloat64), pv = bank->verb_priors.to(torch::kFloat64);
  auto ao = co.accessor<double, 2>();
  auto av = cv.accessor<double, 2>();
  auto to = po.accessor<double, 2>();
  auto tv = pv.accessor<double, 2>();
  for (int i = 0; i < 2; ++i)
    for (int d = 0; d < 3; ++d) {
      double ref = 0;
      for (int c = 0; c < 4; ++c) ref += ao[i][c] * to[c][d];
      for (int c = 0; c < 3; ++c) ref += av[i][c] * tv[c][d];
      EXPECT_NEAR(q[i][d].item<double>(), ref, 1e-6);
    }
}

TEST(LabelPriors, QueryInitIsLinearInTheBank) {
  torch::manual_seed(4);
  LabelEmbeddingBank bank(4, 3, 8);
  CoefficientMatrices coeffs(5, 4, 3);
  bank->to(torch::kFloat64);
  coeffs->to(torch::kFloat64);
  auto q = init_inference_queries(bank, coeffs).detach().clone();
  {
    torch::NoGradGuard no_grad;
    bank->object_priors.mul_(2.0);
    bank->verb_priors.mul_(2.0);
  }
  EXPECT_TRUE(torch::allclose(init_inference_queries(bank, coeffs), 2.0 * q, 0, 1e-14));
}

TEST(LabelPriors, QueryInitShapeMismatchThrows) {
  LabelEmbeddingBank bank(4, 3, 8);
  CoefficientMatrices coeffs(5, 3, 3);
  EXPECT_THROW(init_inference_queries(bank, coeffs), std::invalid_argument);
}

TEST(LabelPriors, SelectAndEncode) {
  LabelEmbeddingBank bank(3, 6, 4);
  {
    torch::NoGradGuard no_grad;
    bank->verb_priors.copy_(torch::cat({torch::eye(4), torch::zeros({2, 4})}, 0));
    bank->verb_priors[5] = torch::tensor({0.0, 0.0, 0.0, 1.0});
  }
  EXPECT_TRUE(torch::equal(select_object_vector(bank, 2), bank->object_priors[2]));
  EXPECT_TRUE(torch::equal(encode_verb_multilabel(bank, {3}), bank->verb_priors[3]));
  // Rows e2 and e5 (here e2 = (0,0,1,0), e5 = (0,0,0,1)) sum by hand.
  EXPECT_TRUE(torch::equal(encode_verb_multilabel(bank, {2, 5}), torch::tensor({0.0f, 0.0f, 1.0f, 1.0f})));
  EXPECT_TRUE(torch::equal(encode_verb_multilabel(bank, {5, 2}), encode_verb_multilabel(bank, {2, 5})));
  EXPECT_THROW(select_object_vector(bank, 3), std::out_of_range);
  EXPECT_THROW(encode_verb_multilabel(bank, {}), std::invalid_argument);
  EXPECT_THROW(encode_verb_multilabel(bank, {6}), std::out_of_range);
}

TEST(LabelPriors, EncodeIsOrderIndependent) {
  torch::manual_seed(8);
  LabelEmbeddingBank bank(2, 5, 16);
  std::vector<int64_t> set{0, 1, 3, 4};
  auto ref = encode_verb_multilabel(bank, set);
  do {
    EXPECT_TRUE(torch::allclose(encode_verb_multilabel(bank, set), ref, 0, 1e-7));
  } while (std::next_permutation(set.begin(), set.end()));
}

TEST(LabelPriors, GradientThroughQueryInit) {
  torch::manual_seed(12);
  LabelEmbeddingBank bank(4, 3, 8);
  CoefficientMatrices coeffs(5, 4, 3);
  bank->to(torch::kFloat64);
  coeffs->to(torch::kFloat64);
  auto weight = torch::randn({5, 8}, torch::kFloat64);
  auto loss = [&] { return (init_inference_queries(bank, coeffs).tanh() * weight).sum(); };
  const double err = testing::gradient_relative_error(
      loss, {bank->object_priors, bank->verb_priors, coeffs->object_coeffs, coeffs->verb_coeffs});
  EXPECT_LT(err, 1e-4);
  EXPECT_GT(bank->object_priors.grad().abs().sum().item<double>(), 0.0);
}

TEST(LabelPriors, OneBankIsSharedAcrossConsumers) {
  ModelConfig cfg;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.queries = 4;
  cfg.ffn_hidden = 16;
  cfg.backbone_channels = 8;
  SovStgModel model(cfg);
  // Fusion reads the bank's verb priors directly; the model owns a single bank.
  int banks = 0;
  for (const auto& m : model->named_modules()) {
    if (dynamic_cast<LabelEmbeddingBankImpl*>(m.value().get())) ++banks;
  }
  EXPECT_EQ(banks, 1);
  EXPECT_EQ(select_object_vector(model->bank, 1).data_ptr(), model->bank->object_priors[1].data_ptr());

  // Editing the bank in place moves both the fusion output and the encoder.
  torch::manual_seed(1);
  auto images = torch::rand({1, 3, 32, 32});
  torch::NoGradGuard no_grad;
  auto before = model->forward(images).verb_queries.back().clone();
  auto encoded = encode_verb_multilabel(model->bank, {1}).clone();
  model->bank->verb_priors.add_(1.0);
  EXPECT_FALSE(torch::equal(model->forward(images).verb_queries.back(), before));
  EXPECT_TRUE(torch::allclose(encode_verb_multilabel(model->bank, {1}), encoded + 1.0));
}

}  // namespace
}  // namespace sovstg

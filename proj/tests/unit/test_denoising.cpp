// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "sovstg/box_ops.hpp"
#include "sovstg/denoising.hpp"
#include "sovstg/model.hpp"

namespace sovstg {
namespace {

HOIInstance instance(int64_t object_class, std::vector<uint8_t> verbs, Box s = {0.3, 0.4, 0.2, 0.3},
                     Box o = {0.6, 0.5, 0.1, 0.1}) {
  HOIInstance h;
  h.subject = s;
  h.object = o;
  h.object_class = object_class;
  h.verbs = std::move(verbs);
  return h;
}

TEST(FlipObject, ExtremesAndErrors) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(flip_object_label(2, 0.0, 6, rng), 2);
  for (int i = 0; i < 100000; ++i) ASSERT_NE(flip_object_label(2, 1.0, 6, rng), 2);
  EXPECT_THROW(flip_object_label(0, 0.5, 1, rng), std::invalid_argument);
  EXPECT_THROW(flip_object_label(6, 0.5, 6, rng), std::out_of_range);
}

TEST(FlipObject, RateAndUniformAlternatives) {
  std::mt19937_64 rng(2);
  std::vector<int> hist(6, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hist[flip_object_label(3, 0.3, 6, rng)];
  EXPECT_NEAR(1.0 - hist[3] / static_cast<double>(n), 0.3, 0.01);
  for (int c = 0; c < 6; ++c)
    if (c != 3) EXPECT_NEAR(hist[c] / static_cast<double>(n), 0.3 / 5, 0.005);
}

TEST(FlipVerb, ExtremesAndErrors) {
  std::mt19937_64 rng(3);
  const std::vector<uint8_t> gt{0, 1, 0, 0, 1};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(flip_verb_label(gt, 0.7, 0.0, rng), gt);
  EXPECT_EQ(flip_verb_label(gt, 1.0, 1.0, rng), std::vector<uint8_t>(5, 1));
  EXPECT_THROW(flip_verb_label({0, 0, 0}, 0.5, 0.5, rng), std::invalid_argument);
}

TEST(FlipVerb, CoOccurrenceKeptAndClassRate) {
  std::mt19937_64 rng(4);
  std::vector<uint8_t> gt(10, 0);
  gt[2] = gt[5] = 1;
  std::vector<int> on(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto out = flip_verb_label(gt, 1.0, 0.2, rng);
    for (int v = 0; v < 10; ++v) on[v] += out[v];
  }
  EXPECT_EQ(on[2], n);
  EXPECT_EQ(on[5], n);
  for (int v = 0; v < 10; ++v)
    if (v != 2 && v != 5) EXPECT_NEAR(on[v] / static_cast<double>(n), 0.2, 0.01);
}

TEST(FlipVerb, LabelNoiseRate) {
  // With lambda = 1 a noised label differs from its ground truth for sure, so
  // the changed fraction estimates eta_v.
  std::mt19937_64 rng(5);
  const std::vector<uint8_t> gt{1, 0, 0, 0, 0};
  int changed = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) changed += flip_verb_label(gt, 0.3, 1.0, rng) != gt;
  EXPECT_NEAR(changed / static_cast<double>(n), 0.3, 0.01);
}

TEST(DNConfig, Validation) {
  DNConfig c;
  EXPECT_NO_THROW(c.validate());
  c.object_flip_rate = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.groups = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(AttentionMask, HandEnumeration) {
  // N_q = 2, one instance, one group: rows/cols 0-1 inference, 2 object-noised, 3 verb-noised.
  auto m = build_attention_mask(2, 1, 1);
  const bool expected[4][4] = {{1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 1}, {1, 1, 1, 1}};
  ASSERT_EQ(m.sizes(), (std::vector<int64_t>{4, 4}));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(m[i][j].item<bool>(), expected[i][j]) << i << "," << j;
  EXPECT_TRUE(build_attention_mask(5, 0, 3).all().item<bool>());
  EXPECT_TRUE(torch::equal(build_attention_mask(4, 2, 3), build_attention_mask(4, 2, 3)));
}

TEST(AttentionMask, GroupStructure) {
  const int64_t nq = 3, k = 2, np = 3;
  auto m = build_attention_mask(nq, k, np);
  auto group_of = [&](int64_t r) {
    const int64_t d = r - nq, inst = d / (2 * np), slot = d % np;
    return inst * np + slot;
  };
  for (int64_t i = 0; i < m.size(0); ++i)
    for (int64_t j = 0; j < m.size(1); ++j) {
      bool want;
      if (j < nq) want = true;
      else if (i < nq) want = false;
      else want = group_of(i) == group_of(j);
      EXPECT_EQ(m[i][j].item<bool>(), want);
    }
}

TEST(BuildDN, LayoutAndShapes) {
  torch::manual_seed(0);
  LabelEmbeddingBank bank(6, 5, 16);
  DNConfig cfg;
  std::mt19937_64 rng(6);
  std::vector<HOIInstance> gts{instance(1, {1, 0, 0, 0, 1}), instance(4, {0, 0, 1, 0, 0})};
  auto dn = build_dn_queries(gts, bank, cfg, 16, rng);
  EXPECT_EQ(dn.queries.sizes(), (std::vector<int64_t>{12, 16}));
  EXPECT_EQ(dn.subject_anchors.size(), 12u);
  EXPECT_EQ(dn.object_anchors.size(), 12u);
  EXPECT_EQ(dn.mask.size(0), 16 + 12);
  for (int64_t r = 0; r < 12; ++r) {
    EXPECT_EQ(dn.gt_index[r], r / 6);
    const bool object_row = (r % 6) < 3;
    EXPECT_EQ(dn.noised_objects[r] >= 0, object_row);
    EXPECT_EQ(dn.noised_verbs[r].empty(), object_row);
    if (object_row) {
      EXPECT_TRUE(torch::equal(dn.queries[r], bank->object_priors[dn.noised_objects[r]]));
    } else {
      std::vector<int64_t> on;
      for (size_t v = 0; v < dn.noised_verbs[r].size(); ++v)
        if (dn.noised_verbs[r][v]) on.push_back(static_cast<int64_t>(v));
      EXPECT_TRUE(torch::allclose(dn.queries[r], encode_verb_multilabel(bank, on), 0, 1e-7));
      for (auto v : gts[r / 6].verb_indices()) EXPECT_TRUE(dn.noised_verbs[r][v]);
    }
  }
  auto empty = build_dn_queries({}, bank, cfg, 16, rng);
  EXPECT_EQ(empty.size(), 0);
  EXPECT_EQ(empty.queries.size(0), 0);
  EXPECT_TRUE(empty.mask.all().item<bool>());
}

TEST(BuildDN, NoiseFreeReducesToCleanEncodings) {
  torch::manual_seed(1);
  LabelEmbeddingBank bank(6, 5, 16);
  DNConfig cfg;
  cfg.object_flip_rate = cfg.verb_noise_rate = cfg.box_noise = 0.0;
  std::mt19937_64 rng(7);
  std::vector<HOIInstance> gts{instance(2, {0, 1, 0, 1, 0}), instance(5, {1, 0, 0, 0, 0}, {0.5, 0.5, 0.4, 0.6})};
  auto dn = build_dn_queries(gts, bank, cfg, 8, rng);
  for (int64_t r = 0; r < dn.size(); ++r) {
    const auto& gt = gts[dn.gt_index[r]];
    const bool object_row = (r % 6) < 3;
    auto clean = object_row ? select_object_vector(bank, gt.object_class) : encode_verb_multilabel(bank, gt.verb_indices());
    EXPECT_TRUE(torch::equal(dn.queries[r], clean));
    EXPECT_EQ(dn.subject_anchors[r], gt.subject);
    EXPECT_EQ(dn.object_anchors[r], gt.object);
  }
}

TEST(BuildDN, SeededDeterminism) {
  torch::manual_seed(2);
  LabelEmbeddingBank bank(6, 5, 8);
  std::vector<HOIInstance> gts{instance(3, {1, 0, 1, 0, 0})};
  std::mt19937_64 a(42), b(42);
  auto x = build_dn_queries(gts, bank, {}, 4, a), y = build_dn_queries(gts, bank, {}, 4, b);
  EXPECT_TRUE(torch::equal(x.queries, y.queries));
  EXPECT_EQ(x.subject_anchors, y.subject_anchors);
  EXPECT_EQ(x.object_anchors, y.object_anchors);
  EXPECT_EQ(x.noised_objects, y.noised_objects);
  EXPECT_EQ(x.noised_verbs, y.noised_verbs);
}

TEST(PadDN, PaddingRowsAreIsolated) {
  torch::manual_seed(3);
  LabelEmbeddingBank bank(6, 5, 8);
  std::mt19937_64 rng(8);
  std::vector<DNGroupBatch> batches{build_dn_queries({instance(0, {1, 0, 0, 0, 0})}, bank, {}, 4, rng),
                                    build_dn_queries({}, bank, {}, 4, rng)};
  auto p = pad_dn_batches(batches, 4, 8, torch::TensorOptions().dtype(torch::kFloat32));
  EXPECT_EQ(p.length(), 6);
  EXPECT_TRUE(p.valid[0].all().item<bool>());
  EXPECT_FALSE(p.valid[1].any().item<bool>());
  EXPECT_TRUE(torch::equal(p.gt_index[1], torch::full({6}, -1, torch::kInt64)));
  auto m = p.mask[1];
  for (int64_t i = 4; i < 10; ++i)
    for (int64_t j = 0; j < 10; ++j) {
      EXPECT_EQ(m[i][j].item<bool>(), i == j);  // padding sees only itself
      EXPECT_EQ(m[j][i].item<bool>(), i == j);
    }
  EXPECT_TRUE(torch::equal(p.mask[0], batches[0].mask));
}

// Tiny model with every branch switched on, so the probe covers all decoders.
ModelConfig probe_config() {
  ModelConfig cfg;
  cfg.num_objects = 4;
  cfg.num_verbs = 3;
  cfg.num_hoi = 6;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.queries = 5;
  cfg.layers = 2;
  cfg.levels = 2;
  cfg.points = 2;
  cfg.ffn_hidden = 32;
  cfg.backbone_channels = 8;
  cfg.advisor_dim = 8;
  cfg.vla = true;
  return cfg;
}

std::vector<torch::Tensor> flatten(const ModelOutput& o) {
  std::vector<torch::Tensor> all;
  for (const auto* v : {&o.subject_boxes, &o.object_boxes, &o.object_logits, &o.verb_logits, &o.subject_embeddings,
                        &o.object_embeddings, &o.verb_queries, &o.verb_embeddings, &o.advisor_embeddings})
    all.insert(all.end(), v->begin(), v->end());
  for (const auto& t : {o.hoi_logits, o.verb_boxes, o.bridge_embeddings})
    if (t.defined()) all.push_back(t);
  return all;
}

TEST(Leakage, InferenceRowsIgnoreDenoisingRows) {
  for (int trial = 0; trial < 3; ++trial) {
    torch::manual_seed(100 + trial);
    SovStgModel model(probe_config());
    model->eval();
    torch::NoGradGuard no_grad;
    auto images = torch::rand({2, 3, 32, 32});
    auto tokens = torch::randn({2, 4, 8});
    std::mt19937_64 rng(trial);
    std::vector<DNGroupBatch> batches{
        build_dn_queries({instance(1, {1, 0, 1}), instance(2, {0, 1, 0})}, model->bank, {}, 5, rng),
        build_dn_queries({instance(3, {0, 0, 1})}, model->bank, {}, 5, rng)};
    auto dn = pad_dn_batches(batches, 5, 16, torch::TensorOptions().dtype(torch::kFloat32));
    auto base = slice_queries(model->forward(images, tokens, &dn), 0, 5);

    PaddedDN noisy = dn;
    noisy.queries = torch::randn_like(dn.queries) * 10;
    noisy.subject_anchors = torch::rand_like(dn.subject_anchors) * 0.9 + 0.05;
    noisy.object_anchors = torch::rand_like(dn.object_anchors) * 0.9 + 0.05;
    auto probe = slice_queries(model->forward(images, tokens, &noisy), 0, 5);
    auto a = flatten(base), b = flatten(probe);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(torch::equal(a[i], b[i])) << "tensor " << i;

    // Without any DN block the inference rows are unchanged as well.
    auto plain = flatten(model->forward(images, tokens, nullptr));
    for (size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(torch::allclose(a[i], plain[i], 1e-5, 1e-6));
  }
}

TEST(Leakage, GroupIsolation) {
  torch::manual_seed(7);
  SovStgModel model(probe_config());
  model->eval();
  torch::NoGradGuard no_grad;
  auto images = torch::rand({1, 3, 32, 32});
  auto tokens = torch::randn({1, 4, 8});
  std::mt19937_64 rng(1);
  DNConfig cfg;
  cfg.groups = 2;
  std::vector<DNGroupBatch> batches{build_dn_queries({instance(1, {1, 0, 1})}, model->bank, cfg, 5, rng)};
  auto dn = pad_dn_batches(batches, 5, 16, torch::TensorOptions().dtype(torch::kFloat32));
  auto base = model->forward(images, tokens, &dn);
  // Group 0 = rows {0, 2} of the DN block, group 1 = rows {1, 3}.
  PaddedDN noisy = dn;
  noisy.queries = dn.queries.clone();
  noisy.queries[0][0] += 3.0;
  noisy.queries[0][2] -= 3.0;
  auto probe = model->forward(images, tokens, &noisy);
  auto row = [&](const ModelOutput& o, int64_t r) { return o.verb_embeddings.back()[0][5 + r]; };
  EXPECT_FALSE(torch::equal(row(base, 0), row(probe, 0)));
  EXPECT_FALSE(torch::equal(row(base, 2), row(probe, 2)));
  EXPECT_TRUE(torch::equal(row(base, 1), row(probe, 1)));
  EXPECT_TRUE(torch::equal(row(base, 3), row(probe, 3)));
  EXPECT_TRUE(torch::equal(probe.hoi_logits[0][6], base.hoi_logits[0][6]));
}

}  // namespace
}  // namespace sovstg

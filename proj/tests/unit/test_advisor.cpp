// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include <gtest/gtest.h>

#include <set>

#include "../support/oracles.hpp"
#include "sovstg/advisor.hpp"
#include "sovstg/synthetic.hpp"

namespace sovstg {
namespace {

const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);

MultiScaleFeatures one_level(int64_t dim, int64_t size) {
  MultiScaleFeatures f;
  f.levels.push_back(torch::randn({1, dim, size, size}, kF64));
  f.strides.push_back(64 / size);
  return f;
}

void zero(torch::nn::Linear& l) {
  torch::NoGradGuard no_grad;
  l->weight.zero_();
  l->bias.zero_();
}

TEST(AdvisorLayer, ResidualOnlyPath) {
  torch::manual_seed(0);
  VisionAdvisorLayer layer(8, 2, 1, 2, 16);
  layer->to(torch::kFloat64);
  zero(layer->self_attn->v_proj);
  zero(layer->token_attn->v_proj);
  zero(layer->region_attn->value_proj);
  zero(layer->ffn->fc2);
  {
    torch::NoGradGuard no_grad;
    layer->self_attn->out_proj->bias.zero_();
    layer->token_attn->out_proj->bias.zero_();
    layer->region_attn->output_proj->bias.zero_();
  }
  auto x = torch::randn({1, 3, 8}, kF64);
  auto boxes = torch::tensor({{{0.5, 0.5, 0.3, 0.3}, {0.4, 0.6, 0.2, 0.4}, {0.7, 0.2, 0.3, 0.2}}}, kF64);
  auto out = layer->forward(x, torch::randn({1, 3, 8}, kF64), torch::randn({1, 2, 8}, kF64), boxes, one_level(8, 4), {});
  EXPECT_TRUE(torch::equal(out, x));
}

// Pre-norm layer of the advisor, spelled out at D=4 with two advisor tokens
// and one 2x2 feature level.
TEST(AdvisorLayer, MatchesStraightLineOracle) {
  torch::manual_seed(1);
  VisionAdvisorLayer layer(4, 1, 1, 2, 8);
  layer->to(torch::kFloat64);
  {
    torch::NoGradGuard no_grad;
    for (auto& p : layer->parameters()) p.copy_(torch::randn_like(p) * 0.5);
  }
  const int64_t n = 3;
  auto x = torch::randn({1, n, 4}, kF64), pos = torch::randn({1, n, 4}, kF64), tokens = torch::randn({1, 2, 4}, kF64);
  auto boxes = torch::tensor({{{0.4, 0.5, 0.5, 0.6}, {0.6, 0.4, 0.3, 0.3}, {0.5, 0.5, 0.8, 0.8}}}, kF64);
  auto f = one_level(4, 2);
  auto got = layer->forward(x, pos, tokens, boxes, f, {});

  auto lin = [](const torch::Tensor& v, torch::nn::Linear& l) { return v.matmul(l->weight.t()) + l->bias; };
  auto ln = [](const torch::Tensor& v, torch::nn::LayerNorm& l) {
    auto mu = v.mean(-1, true);
    auto var = (v - mu).pow(2).mean(-1, true);
    return (v - mu) / torch::sqrt(var + 1e-5) * l->weight + l->bias;
  };
  auto mha = [&](MultiHeadAttention& a, const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v) {
    auto s = lin(q, a->q_proj).matmul(lin(k, a->k_proj).t()) / 2.0;
    return lin(torch::softmax(s, -1).matmul(lin(v, a->v_proj)), a->out_proj);
  };
  torch::NoGradGuard no_grad;
  auto x0 = x[0], p = pos[0];
  auto h = ln(x0, layer->norm1);
  auto y = x0 + mha(layer->self_attn, h + p, h + p, h);
  y = y + mha(layer->token_attn, ln(y, layer->norm2), tokens[0], tokens[0]);
  auto& ra = layer->region_attn;
  auto q3 = ln(y, layer->norm3);
  auto offsets = lin(q3, ra->offset_proj).view({n, 2, 2});
  auto weights = torch::softmax(lin(q3, ra->weight_proj), -1);
  auto value_map =
      (f.levels[0][0].permute({1, 2, 0}).matmul(ra->value_proj->weight.t()) + ra->value_proj->bias).permute({2, 0, 1});
  auto sampled = torch::zeros({n, 4}, kF64);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t k = 0; k < 2; ++k) {
      auto b = boxes[0][i];
      auto s = testing::bilinear_oracle(
          value_map, b[0].item<double>() + offsets[i][k][0].item<double>() * b[2].item<double>() / 2,
          b[1].item<double>() + offsets[i][k][1].item<double>() * b[3].item<double>() / 2);
      for (int c = 0; c < 4; ++c) sampled[i][c] += weights[i][k].item<double>() * s[c];
    }
  y = y + lin(sampled, ra->output_proj);
  y = y + lin(torch::relu(lin(ln(y, layer->norm4), layer->ffn->fc1)), layer->ffn->fc2);
  EXPECT_TRUE(torch::allclose(got[0], y, 0, 1e-6));
}

TEST(AdvisorLayer, GradientCheck) {
  torch::manual_seed(2);
  VisionAdvisorLayer layer(8, 2, 2, 2, 16);
  layer->to(torch::kFloat64);
  {
    torch::NoGradGuard no_grad;
    for (auto& p : layer->region_attn->parameters()) p.add_(torch::randn_like(p) * 0.1);
  }
  auto x = torch::randn({1, 4, 8}, kF64).requires_grad_(true);
  auto pos = torch::randn({1, 4, 8}, kF64).requires_grad_(true);
  auto tokens = torch::randn({1, 3, 8}, kF64).requires_grad_(true);
  auto boxes = torch::tensor({{{0.5, 0.5, 0.3, 0.4}, {0.3, 0.6, 0.2, 0.2}, {0.7, 0.3, 0.4, 0.3}, {0.45, 0.55, 0.6, 0.5}}},
                             kF64);
  MultiScaleFeatures f;
  f.levels = {torch::randn({1, 8, 8, 8}, kF64).requires_grad_(true), torch::randn({1, 8, 4, 4}, kF64).requires_grad_(true)};
  f.strides = {8, 16};
  auto mask = torch::tensor({{1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0}, {1, 1, 0, 1}}).to(torch::kBool);
  auto weight = torch::randn({1, 4, 8}, kF64);
  auto loss = [&] { return (layer(x, pos, tokens, boxes, f, mask) * weight).sum(); };
  std::vector<torch::Tensor> inputs{x, pos, tokens, f.levels[0], f.levels[1]};
  for (auto& p : layer->parameters()) inputs.push_back(p);
  EXPECT_LT(testing::gradient_relative_error(loss, inputs), 1e-4);
}

TEST(AdvisorDecoder, BoxEncodingSwitch) {
  torch::manual_seed(3);
  AdvisorOptions o;
  o.dim = 8;
  o.heads = 2;
  o.layers = 2;
  o.levels = 1;
  o.points = 2;
  o.ffn_hidden = 16;
  o.advisor_dim = 6;
  VisionAdvisorDecoder with_pe(o);
  with_pe->to(torch::kFloat64);
  o.box_positional_encoding = false;
  VisionAdvisorDecoder without_pe(o);
  without_pe->to(torch::kFloat64);
  torch::NoGradGuard no_grad;
  for (auto& p : without_pe->named_parameters()) p.value().copy_(with_pe->named_parameters()[p.key()]);

  auto boxes = torch::tensor({{{0.5, 0.5, 0.3, 0.3}, {0.5, 0.5, 0.3, 0.3}, {0.2, 0.7, 0.2, 0.2}}}, kF64);
  auto pe = with_pe->box_positions(boxes);
  EXPECT_TRUE(torch::equal(pe[0][0], pe[0][1]));
  EXPECT_FALSE(torch::equal(pe[0][0], pe[0][2]));
  EXPECT_FALSE(without_pe->box_positions(boxes).defined());

  auto e = torch::randn({1, 3, 8}, kF64), tokens = torch::randn({1, 4, 6}, kF64);
  auto f = one_level(8, 4);
  auto a = with_pe->forward(e, tokens, f, boxes, {}), b = without_pe->forward(e, tokens, f, boxes, {});
  ASSERT_EQ(a.size(), 2u);
  EXPECT_FALSE(torch::allclose(a[0], b[0]));
  EXPECT_THROW(with_pe->forward(e, torch::Tensor(), f, boxes, {}), std::invalid_argument);
  EXPECT_THROW(with_pe->forward(e, torch::randn({1, 4, 5}, kF64), f, boxes, {}), std::invalid_argument);
}

TEST(Bridge, PassThroughAndTextHead) {
  VHOIBridge bridge(2, 2, true);
  bridge->to(torch::kFloat64);
  torch::nn::Linear verb_head(2, 3);
  verb_head->to(torch::kFloat64);
  {
    torch::NoGradGuard no_grad;
    bridge->projection->weight.copy_(torch::tensor({{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}}, kF64));
    bridge->projection->bias.zero_();
  }
  bridge->init_hoi_head(torch::tensor({{1.0, 0.0}, {0.0, 1.0}}, kF64));
  auto ev = torch::tensor({3.0, 4.0}, kF64).view({1, 1, 2});
  auto out = bridge(ev, torch::zeros({1, 1, 2}, kF64), verb_head);
  EXPECT_TRUE(torch::equal(out.fused, ev));
  EXPECT_TRUE(torch::equal(out.hoi_logits, ev));
  EXPECT_TRUE(torch::allclose(out.verb_logits, verb_head(ev)));
  EXPECT_THROW(bridge->init_hoi_head(torch::zeros({3, 2}, kF64)), std::invalid_argument);
  EXPECT_THROW(bridge(ev, torch::zeros({1, 2, 2}, kF64), verb_head), std::invalid_argument);

  VHOIBridge direct(2, 2, false);
  direct->to(torch::kFloat64);
  direct->init_hoi_head(torch::tensor({{1.0, 0.0}, {0.0, 1.0}}, kF64));
  auto o2 = direct(ev, torch::tensor({1.0, -1.0}, kF64).view({1, 1, 2}), verb_head);
  EXPECT_FALSE(o2.fused.defined());
  EXPECT_FALSE(o2.verb_logits.defined());
  EXPECT_TRUE(torch::equal(o2.hoi_logits, torch::tensor({4.0, 3.0}, kF64).view({1, 1, 2})));
}

// A provider whose prompt sets are fixed, to pin the averaging rule.
class FixedProvider final : public AdvisorProvider {
 public:
  std::string name() const override { return "fixed"; }
  int64_t feature_dim() const override { return 2; }
  int64_t num_tokens() const override { return 1; }
  int64_t text_dim() const override { return 2; }
  AdvisorFeatures extract_image_features(const torch::Tensor&) const override { return {torch::zeros({1, 2})}; }
  std::vector<torch::Tensor> encode_hoi_prompts(const std::vector<std::string>& phrases) const override {
    return std::vector<torch::Tensor>(phrases.size(), torch::tensor({{1.0f, 0.0f}, {0.0f, 1.0f}}));
  }
  uint64_t state_hash() const override { return 0; }
};

TEST(TextWeights, MeanOfPromptSet) {
  Vocabulary vocab;
  vocab.objects = {"ball"};
  vocab.verbs = {"above"};
  vocab.hoi_classes = {{0, 0}};
  auto w = hoi_text_weights(FixedProvider(), vocab);
  EXPECT_TRUE(torch::equal(w, torch::tensor({{0.5f, 0.5f}})));
  EXPECT_EQ(hoi_prompt("holding", "apple"), "a person holding an apple");
  EXPECT_EQ(hoi_prompt("above", "ball"), "a person above a ball");
}

TEST(StubProvider, DeterministicAndCollisionFree) {
  auto p = stub_provider(7, 16, 8);
  auto q = stub_provider(7, 16, 8);
  EXPECT_EQ(p->state_hash(), q->state_hash());
  EXPECT_NE(p->state_hash(), stub_provider(8, 16, 8)->state_hash());
  auto image = torch::rand({3, 64, 64});
  auto a = p->extract_image_features(image), b = q->extract_image_features(image);
  EXPECT_EQ(a.dim(), 8);
  EXPECT_EQ(a.num_tokens(), p->num_tokens());
  EXPECT_TRUE(torch::equal(a.tokens, b.tokens));
  EXPECT_FALSE(torch::equal(a.tokens, p->extract_image_features(torch::rand({3, 64, 64})).tokens));

  std::vector<std::string> phrases;
  for (const auto& o : object_archetypes())
    for (const auto& v : relation_names()) phrases.push_back(hoi_prompt(v, o));
  auto sets = p->encode_hoi_prompts(phrases);
  ASSERT_EQ(sets.size(), phrases.size());
  for (size_t i = 0; i < sets.size(); ++i) {
    EXPECT_EQ(sets[i].size(1), 16);
    EXPECT_TRUE(torch::equal(sets[i], q->encode_hoi_prompts({phrases[i]})[0]));
    for (size_t j = i + 1; j < sets.size(); ++j) EXPECT_FALSE(torch::equal(sets[i], sets[j])) << phrases[i];
  }
  EXPECT_THROW(make_provider("blip2", 7, 16), std::invalid_argument);
  EXPECT_NE(fnv1a("a"), fnv1a("b"));
  EXPECT_EQ(fnv1a(""), 1469598103934665603ull);
}

}  // namespace
}  // namespace sovstg

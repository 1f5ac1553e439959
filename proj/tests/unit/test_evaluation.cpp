// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "../support/oracles.hpp"
#include "sovstg/evaluation.hpp"

namespace sovstg {
namespace {

Vocabulary two_class_vocab() {
  Vocabulary v;
  v.objects = {"ball", "box"};
  v.verbs = {"above", "holding"};
  v.hoi_classes = {{0, 0}, {0, 1}, {1, 0}};
  return v;
}

ImageAnnotation image(int64_t id, int64_t object_class, std::vector<uint8_t> verbs, Box s = {0.3, 0.5, 0.2, 0.4},
                      Box o = {0.6, 0.5, 0.2, 0.2}) {
  ImageAnnotation a;
  a.id = id;
  HOIInstance h;
  h.subject = s;
  h.object = o;
  h.object_class = object_class;
  h.verbs = std::move(verbs);
  a.hois.push_back(h);
  return a;
}

TEST(TripletMatch, MinRule) {
  GroundTruthTriplet gt{0, {0.5, 0.5, 0.4, 0.4}, {0.5, 0.5, 0.4, 0.4}, 2};
  Detection d{0, gt.subject, gt.object, 2, 1.0};
  EXPECT_TRUE(triplet_match(d, gt, 0.5));
  d.hoi_class = 1;
  EXPECT_FALSE(triplet_match(d, gt, 0.5));
  d.hoi_class = 2;
  // Subject IoU 0.6, object IoU 0.4: a horizontal shift dx gives (w-dx)/(w+dx).
  d.subject.cx = 0.5 + 0.1;
  d.object.cx = 0.5 + 0.4 * (1 - 0.4) / (1 + 0.4);
  EXPECT_NEAR(iou(d.subject, gt.subject), 0.6, 1e-12);
  EXPECT_NEAR(iou(d.object, gt.object), 0.4, 1e-12);
  EXPECT_FALSE(triplet_match(d, gt, 0.5));
}

TEST(AveragePrecision, HandCases) {
  EXPECT_DOUBLE_EQ(average_precision({1}, 1, ApInterpolation::kAllPoint), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({0, 1}, 1, ApInterpolation::kAllPoint), 0.5);
  EXPECT_DOUBLE_EQ(average_precision({1, 0, 1}, 2, ApInterpolation::kAllPoint), 0.5 + 0.5 * (2.0 / 3.0));
  EXPECT_DOUBLE_EQ(average_precision({}, 3, ApInterpolation::kAllPoint), 0.0);
  EXPECT_TRUE(std::isnan(average_precision({1}, 0, ApInterpolation::kAllPoint)));
  EXPECT_NEAR(average_precision({1}, 1, ApInterpolation::kElevenPoint), 1.0, 1e-12);
  EXPECT_NEAR(average_precision({0, 1}, 2, ApInterpolation::kElevenPoint), 6.0 / 11.0 * 0.5, 1e-12);
}

TEST(EvaluateMap, SingleCorrectAndLeadingFalsePositive) {
  const auto vocab = two_class_vocab();
  std::vector<ImageAnnotation> images{image(0, 0, {1, 0})};
  const auto& h = images[0].hois[0];
  std::vector<int64_t> counts{20, 20, 20};
  auto r = evaluate_map({{0, h.subject, h.object, 0, 0.9}}, images, vocab, counts, {});
  EXPECT_DOUBLE_EQ(r.class_ap[0], 1.0);
  EXPECT_DOUBLE_EQ(r.full, 1.0);
  EXPECT_FALSE(r.class_valid[1]);
  EXPECT_TRUE(std::isnan(r.class_ap[1]));
  EXPECT_TRUE(std::isnan(r.rare));

  auto fp = evaluate_map({{0, h.subject, h.object, 0, 0.5}, {0, {0.1, 0.1, 0.1, 0.1}, h.object, 0, 0.9}}, images,
                         vocab, counts, {});
  EXPECT_DOUBLE_EQ(fp.class_ap[0], 0.5);
}

TEST(EvaluateMap, DuplicatesCountOnce) {
  const auto vocab = two_class_vocab();
  std::vector<ImageAnnotation> images{image(0, 0, {1, 0})};
  const auto& h = images[0].hois[0];
  auto r = evaluate_map({{0, h.subject, h.object, 0, 0.9}, {0, h.subject, h.object, 0, 0.8}}, images, vocab,
                        {20, 20, 20}, {});
  // Second detection is a false positive after full recall: AP stays 1.
  EXPECT_DOUBLE_EQ(r.class_ap[0], 1.0);
  images.push_back(image(1, 0, {1, 0}));
  r = evaluate_map({{0, h.subject, h.object, 0, 0.9}, {0, h.subject, h.object, 0, 0.8}}, images, vocab, {20, 20, 20},
                   {});
  EXPECT_DOUBLE_EQ(r.class_ap[0], 0.5);
}

TEST(EvaluateMap, RareSplitAndErrors) {
  const auto vocab = two_class_vocab();
  std::vector<ImageAnnotation> images{image(0, 0, {1, 1}), image(1, 1, {1, 0})};
  std::vector<Detection> dets;
  for (const auto& img : images)
    for (const auto& h : img.hois)
      for (auto v : h.verb_indices()) dets.push_back({img.id, h.subject, h.object, vocab.hoi_index(h.object_class, v), 0.7});
  auto r = evaluate_map(dets, images, vocab, {3, 50, 50}, {});
  EXPECT_TRUE(r.class_rare[0]);
  EXPECT_FALSE(r.class_rare[1]);
  EXPECT_DOUBLE_EQ(r.rare, 1.0);
  EXPECT_DOUBLE_EQ(r.non_rare, 1.0);
  EXPECT_THROW(evaluate_map(dets, images, vocab, {1, 2}, {}), std::invalid_argument);
  EvalConfig bad;
  bad.iou_threshold = 1.0;
  EXPECT_THROW(evaluate_map(dets, images, vocab, {3, 50, 50}, bad), std::invalid_argument);
  dets.push_back({0, {}, {}, 9, 0.1});
  EXPECT_THROW(evaluate_map(dets, images, vocab, {3, 50, 50}, {}), std::out_of_range);
}

TEST(EvaluateMap, MatchesExhaustiveReference) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    auto t = testing::random_tiny_case(rng);
    auto got = evaluate_map(t.detections, t.images, t.vocab, t.train_counts, {});
    auto ref = testing::reference_map(t.detections, t.images, t.vocab, t.train_counts, 0.5, 10);
    for (int64_t c = 0; c < t.vocab.num_hoi(); ++c) ASSERT_TRUE(testing::same_or_both_nan(got.class_ap[c], ref.class_ap[c]));
    ASSERT_TRUE(testing::same_or_both_nan(got.full, ref.full));
    ASSERT_TRUE(testing::same_or_both_nan(got.rare, ref.rare));
    ASSERT_TRUE(testing::same_or_both_nan(got.non_rare, ref.non_rare));
  }
}

TEST(EvaluateMap, PropertiesOnRandomCases) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = testing::random_tiny_case(rng);
    auto base = evaluate_map(t.detections, t.images, t.vocab, t.train_counts, {});
    if (!std::isnan(base.full)) {
      EXPECT_GE(base.full, 0.0);
      EXPECT_LE(base.full, 1.0);
    }
    // Image order does not matter.
    auto shuffled = t.images;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_TRUE(testing::same_or_both_nan(evaluate_map(t.detections, shuffled, t.vocab, t.train_counts, {}).full,
                                          base.full));
    // A correct detection above every other score never lowers a class AP.
    for (const auto& img : t.images) {
      if (img.hois.empty()) continue;
      const auto& h = img.hois[0];
      const auto cls = t.vocab.hoi_index(h.object_class, h.verb_indices()[0]);
      auto more = t.detections;
      more.push_back({img.id, h.subject, h.object, cls, 2.0});
      auto better = evaluate_map(more, t.images, t.vocab, t.train_counts, {});
      EXPECT_GE(better.class_ap[cls], base.class_ap[cls] - 1e-12);
      break;
    }
    // Known-Object pools are subsets of the default pools.
    auto ko = evaluation_pools(t.images, t.vocab, EvalSetting::kKnownObject);
    auto df = evaluation_pools(t.images, t.vocab, EvalSetting::kDefault);
    for (size_t c = 0; c < ko.size(); ++c) {
      std::set<int64_t> all(df[c].begin(), df[c].end());
      for (auto id : ko[c]) EXPECT_TRUE(all.count(id));
    }
  }
}

TEST(EvaluateMap, KnownObjectIgnoresImagesWithoutTheObject) {
  const auto vocab = two_class_vocab();
  std::vector<ImageAnnotation> images{image(0, 0, {1, 0}), image(1, 1, {1, 0})};
  const auto& h = images[0].hois[0];
  // A high-scoring class-0 false positive on the image without a ball.
  std::vector<Detection> dets{{0, h.subject, h.object, 0, 0.5}, {1, h.subject, h.object, 0, 0.9}};
  EvalConfig ko;
  ko.setting = EvalSetting::kKnownObject;
  EXPECT_DOUBLE_EQ(evaluate_map(dets, images, vocab, {20, 20, 20}, {}).class_ap[0], 0.5);
  EXPECT_DOUBLE_EQ(evaluate_map(dets, images, vocab, {20, 20, 20}, ko).class_ap[0], 1.0);
  EXPECT_EQ(parse_eval_setting("known-object"), EvalSetting::kKnownObject);
  EXPECT_EQ(to_string(EvalSetting::kDefault), "default");
  EXPECT_THROW(parse_eval_setting("scenario-1"), std::invalid_argument);
}

TEST(Predictions, JsonRoundTripAndExpansion) {
  const auto vocab = two_class_vocab();
  QueryPrediction p{3, {0.3, 0.4, 0.2, 0.2}, {0.6, 0.5, 0.1, 0.3}, 0, 0.8, {0.5, 0.25}, {0.9, 0.1, 0.4}};
  auto back = parse_prediction_line(to_json_line(p));
  EXPECT_EQ(back.image_id, 3);
  EXPECT_EQ(back.subject, p.subject);
  EXPECT_EQ(back.verb_scores, p.verb_scores);
  EXPECT_EQ(back.hoi_scores, p.hoi_scores);

  const auto path = std::filesystem::temp_directory_path() / "sovstg_predictions_test.jsonl";
  write_predictions(path.string(), {p, p});
  EXPECT_EQ(read_predictions(path.string()).size(), 2u);
  std::filesystem::remove(path);

  // Object 0 owns HOI classes 0 and 1.
  auto verb_dets = detections_from_predictions({p}, vocab, false, 100);
  ASSERT_EQ(verb_dets.size(), 2u);
  EXPECT_DOUBLE_EQ(verb_dets[0].score, 0.8 * 0.5);
  EXPECT_EQ(verb_dets[0].hoi_class, 0);
  EXPECT_DOUBLE_EQ(verb_dets[1].score, 0.8 * 0.25);
  auto hoi_dets = detections_from_predictions({p}, vocab, true, 1);
  ASSERT_EQ(hoi_dets.size(), 1u);
  EXPECT_DOUBLE_EQ(hoi_dets[0].score, 0.8 * 0.9);
  EXPECT_THROW(parse_prediction_line("{\"image_id\": 1}"), std::exception);

  MapResult r;
  r.full = 0.5;
  r.rare = 0.25;
  r.non_rare = 0.75;
  EXPECT_EQ(map_csv(r, EvalSetting::kDefault),
            "setting,category,mAP\ndefault,full,0.500000\ndefault,rare,0.250000\ndefault,non_rare,0.750000\n");
}

}  // namespace
}  // namespace sovstg

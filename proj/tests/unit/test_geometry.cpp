// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "sovstg/box_ops.hpp"
#include "sovstg/geometry.hpp"

namespace sovstg {
namespace {

using testing::direct_asmbr;
using testing::random_box;

void expect_box(const Box& b, double cx, double cy, double w, double h, double tol = 1e-12) {
  EXPECT_NEAR(b.cx, cx, tol);
  EXPECT_NEAR(b.cy, cy, tol);
  EXPECT_NEAR(b.w, w, tol);
  EXPECT_NEAR(b.h, h, tol);
}

TEST(VerbBoxes, HandCases) {
  const Box same{0.5, 0.5, 0.3, 0.3};
  expect_box(make_asmbr(same, same), 0.5, 0.5, 0.3, 0.3);
  expect_box(make_mbr(same, same), 0.5, 0.5, 0.3, 0.3);
  expect_box(make_smbr(same, same), 0.5, 0.5, 0.3, 0.3);

  const Box s{0.2, 0.2, 0.2, 0.2}, o{0.6, 0.6, 0.2, 0.2};
  expect_box(make_asmbr(s, o), 0.4, 0.4, 0.6, 0.6);
  expect_box(make_mbr(s, o), 0.4, 0.4, 0.6, 0.6);

  expect_box(make_mbr({0.5, 0.5, 0.8, 0.8}, {0.5, 0.5, 0.1, 0.1}), 0.5, 0.5, 0.8, 0.8);
  // SMBR keeps the MBR extent but re-centres on the centre midpoint.
  expect_box(make_smbr({0.5, 0.5, 0.8, 0.8}, {0.7, 0.5, 0.1, 0.1}), 0.6, 0.5, 0.8, 0.8);
}

TEST(VerbBoxes, AsmbrMatchesDirectEvaluation) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Box s = random_box(rng), o = random_box(rng);
    const auto ref = direct_asmbr(s, o);
    const Box got = make_asmbr(s, o);
    EXPECT_NEAR(got.cx, ref[0], 1e-9);
    EXPECT_NEAR(got.cy, ref[1], 1e-9);
    // Wider-than-image results are clamped; compare against the clamped oracle.
    EXPECT_NEAR(got.w, std::min(ref[2], 1.0), 1e-9);
    EXPECT_NEAR(got.h, std::min(ref[3], 1.0), 1e-9);
  }
}

TEST(VerbBoxes, SymmetryIdentityAndContainment) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    EXPECT_EQ(make_asmbr(a, b), make_asmbr(b, a));
    EXPECT_EQ(make_mbr(a, b), make_mbr(b, a));
    EXPECT_EQ(make_smbr(a, b), make_smbr(b, a));
    expect_box(make_asmbr(a, a), a.cx, a.cy, a.w, a.h);
    expect_box(make_mbr(a, a), a.cx, a.cy, a.w, a.h);
    expect_box(make_smbr(a, a), a.cx, a.cy, a.w, a.h);

    const Box m = make_mbr(a, b);
    for (const Box& in : {a, b}) {
      EXPECT_LE(m.x1(), in.x1() + 1e-12);
      EXPECT_LE(m.y1(), in.y1() + 1e-12);
      EXPECT_GE(m.x2(), in.x2() - 1e-12);
      EXPECT_GE(m.y2(), in.y2() - 1e-12);
    }
    const Box as = make_asmbr(a, b), sm = make_smbr(a, b);
    EXPECT_NEAR(as.cx, (a.cx + b.cx) / 2, 1e-12);
    EXPECT_NEAR(sm.cy, (a.cy + b.cy) / 2, 1e-12);

    const bool x_nested = (a.x1() <= b.x1() && a.x2() >= b.x2()) || (b.x1() <= a.x1() && b.x2() >= a.x2());
    if (x_nested) EXPECT_LE(as.w, m.w + 1e-12);
  }
}

TEST(Overlap, HandCases) {
  const Box a{0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(giou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou({0.25, 0.25, 0.5, 0.5}, {0.75, 0.75, 0.5, 0.5}), 0.0);
  EXPECT_NEAR(iou(a, {0.75, 0.5, 0.5, 0.5}), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(intersection_area(a, {0.75, 0.5, 0.5, 0.5}), 0.125, 1e-12);
  // Empty union is defined as zero overlap.
  EXPECT_EQ(iou({0.5, 0.5, 0.0, 0.0}, {0.5, 0.5, 0.0, 0.0}), 0.0);
}

TEST(Overlap, RangeAndOrdering) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double u = iou(a, b), g = giou(a, b);
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 1.0);
    EXPECT_LE(g, u + 1e-12);
    EXPECT_GE(g, -1.0);
    EXPECT_NEAR(u, testing::box_iou(a, b), 1e-12);
  }
}

TEST(NoiseBox, ZeroScaleIsIdentity) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Box b = random_box(rng);
    EXPECT_EQ(noise_box(b, 0.0, rng), b);
  }
}

TEST(NoiseBox, EmpiricalBounds) {
  std::mt19937_64 rng(2);
  const Box gt{0.5, 0.5, 0.3, 0.2};
  double max_dx = 0, max_dy = 0, min_rw = 10, max_rw = 0, min_rh = 10, max_rh = 0;
  for (int i = 0; i < 100000; ++i) {
    const Box n = noise_box(gt, 0.4, rng);
    ASSERT_TRUE(is_valid(n));
    max_dx = std::max(max_dx, std::fabs(n.cx - gt.cx));
    max_dy = std::max(max_dy, std::fabs(n.cy - gt.cy));
    min_rw = std::min(min_rw, n.w / gt.w);
    max_rw = std::max(max_rw, n.w / gt.w);
    min_rh = std::min(min_rh, n.h / gt.h);
    max_rh = std::max(max_rh, n.h / gt.h);
  }
  EXPECT_LE(max_dx, 0.4 * gt.w / 2 + 1e-12);
  EXPECT_LE(max_dy, 0.4 * gt.h / 2 + 1e-12);
  EXPECT_GE(min_rw, 0.6 - 1e-12);
  EXPECT_LE(max_rw, 1.4 + 1e-12);
  EXPECT_GE(min_rh, 0.6 - 1e-12);
  EXPECT_LE(max_rh, 1.4 + 1e-12);
  // The bounds are approached, not merely respected.
  EXPECT_GT(max_dx, 0.38 * gt.w / 2);
  EXPECT_LT(min_rw, 0.62);
}

TEST(NoiseBox, SeededDeterminismAndClamping) {
  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(noise_box({0.1, 0.9, 0.5, 0.5}, 0.9, a), noise_box({0.1, 0.9, 0.5, 0.5}, 0.9, b));
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(is_valid(noise_box({0.99, 0.01, 0.9, 0.9}, 0.9, rng)));
  const Box c = clamp_box({1.5, -0.2, 0.0, 2.0});
  EXPECT_EQ(c.cx, 1.0);
  EXPECT_EQ(c.cy, 0.0);
  EXPECT_EQ(c.w, kMinBoxSize);
  EXPECT_EQ(c.h, 1.0);
}

TEST(BoxOps, TensorFormsAgreeWithScalarForms) {
  std::mt19937_64 rng(21);
  std::vector<Box> s, o;
  for (int i = 0; i < 64; ++i) s.push_back(random_box(rng)), o.push_back(random_box(rng));
  auto ts = box_ops::to_tensor(s, torch::kFloat64), to = box_ops::to_tensor(o, torch::kFloat64);
  auto as = box_ops::to_boxes(box_ops::asmbr(ts, to));
  auto ms = box_ops::to_boxes(box_ops::mbr(ts, to));
  auto ss = box_ops::to_boxes(box_ops::smbr(ts, to));
  auto g = box_ops::elementwise_giou(ts, to);
  auto pg = box_ops::pairwise_giou(ts, to);
  for (int i = 0; i < 64; ++i) {
    const Box ra = make_asmbr(s[i], o[i]), rm = make_mbr(s[i], o[i]), rs = make_smbr(s[i], o[i]);
    expect_box(as[i], ra.cx, ra.cy, ra.w, ra.h, 1e-12);
    expect_box(ms[i], rm.cx, rm.cy, rm.w, rm.h, 1e-12);
    expect_box(ss[i], rs.cx, rs.cy, rs.w, rs.h, 1e-12);
    EXPECT_NEAR(g[i].item<double>(), giou(s[i], o[i]), 1e-12);
    EXPECT_NEAR(pg[i][(i + 1) % 64].item<double>(), giou(s[i], o[(i + 1) % 64]), 1e-12);
  }
  auto rt = box_ops::xyxy_to_cxcywh(box_ops::cxcywh_to_xyxy(ts));
  EXPECT_TRUE(torch::allclose(rt, ts, 0, 1e-12));
  EXPECT_TRUE(torch::equal(box_ops::verb_box(box_ops::VerbBoxKind::kObject, ts, to), to));
  EXPECT_TRUE(torch::equal(box_ops::verb_box(box_ops::VerbBoxKind::kSubject, ts, to), ts));
}

TEST(BoxOps, VerbBoxKindNames) {
  for (auto k : {box_ops::VerbBoxKind::kObject, box_ops::VerbBoxKind::kSubject, box_ops::VerbBoxKind::kMbr,
                 box_ops::VerbBoxKind::kSmbr, box_ops::VerbBoxKind::kAsmbr}) {
    EXPECT_EQ(box_ops::parse_verb_box_kind(box_ops::to_string(k)), k);
  }
  EXPECT_THROW(box_ops::parse_verb_box_kind("circle"), std::invalid_argument);
}

}  // namespace
}  // namespace sovstg

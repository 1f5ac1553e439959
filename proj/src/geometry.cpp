// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sovstg {

bool is_valid(const Box& b) {
  return b.cx >= 0.0 && b.cx <= 1.0 && b.cy >= 0.0 && b.cy <= 1.0 && b.w > 0.0 && b.w <= 1.0 &&
         b.h > 0.0 && b.h <= 1.0;
}

Box clamp_box(const Box& b) {
  return Box{std::clamp(b.cx, 0.0, 1.0), std::clamp(b.cy, 0.0, 1.0),
             std::clamp(b.w, kMinBoxSize, 1.0), std::clamp(b.h, kMinBoxSize, 1.0)};
}

Box make_mbr(const Box& subject, const Box& object) {
  return Box::from_corners(std::min(subject.x1(), object.x1()), std::min(subject.y1(), object.y1()),
                           std::max(subject.x2(), object.x2()), std::max(subject.y2(), object.y2()));
}

Box make_smbr(const Box& subject, const Box& object) {
  Box mbr = make_mbr(subject, object);
  mbr.cx = 0.5 * (subject.cx + object.cx);
  mbr.cy = 0.5 * (subject.cy + object.cy);
  return mbr;
}

Box make_asmbr(const Box& subject, const Box& object) {
  const Box verb{0.5 * (subject.cx + object.cx), 0.5 * (subject.cy + object.cy),
                 0.5 * (subject.w + object.w) + std::abs(subject.cx - object.cx),
                 0.5 * (subject.h + object.h) + std::abs(subject.cy - object.cy)};
  return clamp_box(verb);
}

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double giou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double enclosing = make_mbr(a, b).area();
  const double overlap = uni > 0.0 ? inter / uni : 0.0;
  if (enclosing <= 0.0) return overlap;
  return overlap - (enclosing - uni) / enclosing;
}

Box noise_box(const Box& gt, double noise_scale, std::mt19937_64& rng) {
  if (noise_scale <= 0.0) return gt;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double dx = unit(rng) * noise_scale * 0.5 * gt.w;
  const double dy = unit(rng) * noise_scale * 0.5 * gt.h;
  const double sw = 1.0 + unit(rng) * noise_scale;
  const double sh = 1.0 + unit(rng) * noise_scale;
  return clamp_box(Box{gt.cx + dx, gt.cy + dy, gt.w * sw, gt.h * sh});
}

}  // namespace sovstg

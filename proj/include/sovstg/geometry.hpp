// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <array>
#include <random>

namespace sovstg {

// Smallest width/height a clamped box may have.
inline constexpr double kMinBoxSize = 1e-4;

/// Normalized center-size rectangle. All coordinates are fractions of the
/// image extent.
struct Box {
  double cx = 0.5;
  double cy = 0.5;
  double w = 0.1;
  double h = 0.1;

  double x1() const { return cx - 0.5 * w; }
  double y1() const { return cy - 0.5 * h; }
  double x2() const { return cx + 0.5 * w; }
  double y2() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  std::array<double, 4> corners() const { return {x1(), y1(), x2(), y2()}; }
  std::array<double, 4> as_array() const { return {cx, cy, w, h}; }

  static Box from_corners(double x1, double y1, double x2, double y2) {
    return Box{0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
  }

  bool operator==(const Box&) const = default;
};

/// True when 0 <= cx, cy <= 1 and 0 < w, h <= 1.
bool is_valid(const Box& b);

/// Clamps centers into [0,1] and sizes into [kMinBoxSize, 1].
Box clamp_box(const Box& b);

/// Minimum bounding rectangle of both boxes.
Box make_mbr(const Box& subject, const Box& object);

/// MBR extent re-centred on the midpoint of the two box centres.
Box make_smbr(const Box& subject, const Box& object);

/// Adaptive shifted MBR: centre at the midpoint of the two centres, each side
/// equal to the mean side length plus the centre distance along that axis.
/// The result is clamped to a valid box.
Box make_asmbr(const Box& subject, const Box& object);

double intersection_area(const Box& a, const Box& b);

/// Intersection over union. Defined as 0 when the union is empty.
double iou(const Box& a, const Box& b);

/// Generalized IoU, in [-1, 1].
double giou(const Box& a, const Box& b);

/// Scale-and-shift jitter used for denoising anchors. The centre moves by a
/// uniform offset of at most noise_scale * (w/2, h/2) and each side is scaled
/// by a factor drawn from [1 - noise_scale, 1 + noise_scale]. A zero scale
/// returns the input unchanged.
Box noise_box(const Box& gt, double noise_scale, std::mt19937_64& rng);

}  // namespace sovstg

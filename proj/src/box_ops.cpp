// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/box_ops.hpp"

#include <stdexcept>

namespace sovstg::box_ops {

using torch::indexing::Ellipsis;
using torch::indexing::Slice;

VerbBoxKind parse_verb_box_kind(const std::string& name) {
  if (name == "object") return VerbBoxKind::kObject;
  if (name == "subject") return VerbBoxKind::kSubject;
  if (name == "mbr") return VerbBoxKind::kMbr;
  if (name == "smbr") return VerbBoxKind::kSmbr;
  if (name == "asmbr") return VerbBoxKind::kAsmbr;
  throw std::invalid_argument("unknown verb box variant '" + name + "'");
}

std::string to_string(VerbBoxKind kind) {
  switch (kind) {
    case VerbBoxKind::kObject: return "object";
    case VerbBoxKind::kSubject: return "subject";
    case VerbBoxKind::kMbr: return "mbr";
    case VerbBoxKind::kSmbr: return "smbr";
    case VerbBoxKind::kAsmbr: return "asmbr";
  }
  return "asmbr";
}

torch::Tensor cxcywh_to_xyxy(const torch::Tensor& boxes) {
  auto c = boxes.unbind(-1);
  return torch::stack({c[0] - 0.5 * c[2], c[1] - 0.5 * c[3], c[0] + 0.5 * c[2], c[1] + 0.5 * c[3]}, -1);
}

torch::Tensor xyxy_to_cxcywh(const torch::Tensor& boxes) {
  auto c = boxes.unbind(-1);
  return torch::stack({0.5 * (c[0] + c[2]), 0.5 * (c[1] + c[3]), c[2] - c[0], c[3] - c[1]}, -1);
}

torch::Tensor inverse_sigmoid(const torch::Tensor& x, double eps) {
  auto y = x.clamp(0.0, 1.0);
  return torch::log(y.clamp_min(eps) / (1.0 - y).clamp_min(eps));
}

namespace {

// Shared tail of the GIoU computations; inputs already broadcast to a common
// shape in xyxy form.
torch::Tensor giou_xyxy(const torch::Tensor& a, const torch::Tensor& b) {
  auto area_a = (a.select(-1, 2) - a.select(-1, 0)) * (a.select(-1, 3) - a.select(-1, 1));
  auto area_b = (b.select(-1, 2) - b.select(-1, 0)) * (b.select(-1, 3) - b.select(-1, 1));
  auto lt = torch::maximum(a.index({Ellipsis, Slice(0, 2)}), b.index({Ellipsis, Slice(0, 2)}));
  auto rb = torch::minimum(a.index({Ellipsis, Slice(2, 4)}), b.index({Ellipsis, Slice(2, 4)}));
  auto wh = (rb - lt).clamp_min(0.0);
  auto inter = wh.select(-1, 0) * wh.select(-1, 1);
  auto uni = area_a + area_b - inter;
  auto overlap = inter / uni.clamp_min(1e-12);
  auto elt = torch::minimum(a.index({Ellipsis, Slice(0, 2)}), b.index({Ellipsis, Slice(0, 2)}));
  auto erb = torch::maximum(a.index({Ellipsis, Slice(2, 4)}), b.index({Ellipsis, Slice(2, 4)}));
  auto ewh = (erb - elt).clamp_min(0.0);
  auto enclosing = ewh.select(-1, 0) * ewh.select(-1, 1);
  return overlap - (enclosing - uni) / enclosing.clamp_min(1e-12);
}

}  // namespace

torch::Tensor elementwise_giou(const torch::Tensor& a, const torch::Tensor& b) {
  return giou_xyxy(cxcywh_to_xyxy(a), cxcywh_to_xyxy(b));
}

torch::Tensor pairwise_giou(const torch::Tensor& a, const torch::Tensor& b) {
  auto ax = cxcywh_to_xyxy(a).unsqueeze(1);
  auto bx = cxcywh_to_xyxy(b).unsqueeze(0);
  auto shape = std::vector<int64_t>{a.size(0), b.size(0), 4};
  return giou_xyxy(ax.expand(shape), bx.expand(shape));
}

torch::Tensor mbr(const torch::Tensor& subject, const torch::Tensor& object) {
  auto s = cxcywh_to_xyxy(subject);
  auto o = cxcywh_to_xyxy(object);
  auto lt = torch::minimum(s.index({Ellipsis, Slice(0, 2)}), o.index({Ellipsis, Slice(0, 2)}));
  auto rb = torch::maximum(s.index({Ellipsis, Slice(2, 4)}), o.index({Ellipsis, Slice(2, 4)}));
  return xyxy_to_cxcywh(torch::cat({lt, rb}, -1));
}

torch::Tensor smbr(const torch::Tensor& subject, const torch::Tensor& object) {
  auto box = mbr(subject, object);
  auto center = 0.5 * (subject.index({Ellipsis, Slice(0, 2)}) + object.index({Ellipsis, Slice(0, 2)}));
  return torch::cat({center, box.index({Ellipsis, Slice(2, 4)})}, -1);
}

torch::Tensor asmbr(const torch::Tensor& subject, const torch::Tensor& object) {
  auto sc = subject.index({Ellipsis, Slice(0, 2)});
  auto oc = object.index({Ellipsis, Slice(0, 2)});
  auto center = 0.5 * (sc + oc);
  auto size = 0.5 * (subject.index({Ellipsis, Slice(2, 4)}) + object.index({Ellipsis, Slice(2, 4)})) +
              (sc - oc).abs();
  return torch::cat({center.clamp(0.0, 1.0), size.clamp(kMinBoxSize, 1.0)}, -1);
}

torch::Tensor verb_box(VerbBoxKind kind, const torch::Tensor& subject, const torch::Tensor& object) {
  switch (kind) {
    case VerbBoxKind::kObject: return object;
    case VerbBoxKind::kSubject: return subject;
    case VerbBoxKind::kMbr: return mbr(subject, object);
    case VerbBoxKind::kSmbr: return smbr(subject, object);
    case VerbBoxKind::kAsmbr: return asmbr(subject, object);
  }
  return asmbr(subject, object);
}

torch::Tensor to_tensor(const std::vector<Box>& boxes, torch::ScalarType dtype) {
  auto out = torch::empty({static_cast<int64_t>(boxes.size()), 4}, torch::kFloat64);
  auto acc = out.accessor<double, 2>();
  for (size_t i = 0; i < boxes.size(); ++i) {
    acc[i][0] = boxes[i].cx;
    acc[i][1] = boxes[i].cy;
    acc[i][2] = boxes[i].w;
    acc[i][3] = boxes[i].h;
  }
  return out.to(dtype);
}

std::vector<Box> to_boxes(const torch::Tensor& boxes) {
  auto t = boxes.detach().to(torch::kFloat64).reshape({-1, 4}).contiguous();
  auto acc = t.accessor<double, 2>();
  std::vector<Box> out(t.size(0));
  for (int64_t i = 0; i < t.size(0); ++i) out[i] = Box{acc[i][0], acc[i][1], acc[i][2], acc[i][3]};
  return out;
}

}  // namespace sovstg::box_ops

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/losses.hpp"

#include <stdexcept>

#include "sovstg/box_ops.hpp"

namespace sovstg {

namespace F = torch::nn::functional;

ImageTargets make_targets(const ImageAnnotation& image, const Vocabulary& vocab, torch::ScalarType dtype) {
  const auto k = static_cast<int64_t>(image.hois.size());
  ImageTargets t;
  std::vector<Box> subjects, objects;
  std::vector<int64_t> classes;
  t.verbs = torch::zeros({k, vocab.num_verbs()}, dtype);
  t.hoi = torch::zeros({k, vocab.num_hoi()}, dtype);
  for (int64_t i = 0; i < k; ++i) {
    const auto& h = image.hois[i];
    subjects.push_back(h.subject);
    objects.push_back(h.object);
    classes.push_back(h.object_class);
    for (auto v : h.verb_indices()) {
      t.verbs[i][v] = 1.0;
      const auto idx = vocab.hoi_index(h.object_class, v);
      if (idx >= 0) t.hoi[i][idx] = 1.0;
    }
  }
  t.subject = box_ops::to_tensor(subjects, dtype);
  t.object = box_ops::to_tensor(objects, dtype);
  t.object_class = torch::tensor(classes, torch::kInt64);
  return t;
}

double LossBreakdown::value(const std::string& name) const {
  auto it = terms.find(name);
  return it == terms.end() ? 0.0 : it->second.item<double>();
}

torch::Tensor sigmoid_focal_loss(const torch::Tensor& logits, const torch::Tensor& targets, double alpha, double gamma,
                                 const torch::Tensor& row_weight) {
  auto p = torch::sigmoid(logits);
  auto ce = F::binary_cross_entropy_with_logits(logits, targets,
                                                F::BinaryCrossEntropyWithLogitsFuncOptions().reduction(torch::kNone));
  auto p_t = p * targets + (1.0 - p) * (1.0 - targets);
  auto loss = ce * torch::pow(1.0 - p_t, gamma);
  if (alpha >= 0.0) loss = loss * (alpha * targets + (1.0 - alpha) * (1.0 - targets));
  if (row_weight.defined()) loss = loss * row_weight.unsqueeze(-1).to(loss.dtype());
  return loss.sum();
}

namespace {

struct Concatenated {
  torch::Tensor subject, object, object_class, verbs, hoi;
  std::vector<int64_t> offsets;
  int64_t total = 0;
};

Concatenated concatenate(const std::vector<ImageTargets>& targets, torch::ScalarType dtype) {
  Concatenated c;
  std::vector<torch::Tensor> s, o, cls, v, h;
  for (const auto& t : targets) {
    c.offsets.push_back(c.total);
    c.total += t.size();
    s.push_back(t.subject.to(dtype));
    o.push_back(t.object.to(dtype));
    cls.push_back(t.object_class);
    v.push_back(t.verbs.to(dtype));
    h.push_back(t.hoi.to(dtype));
  }
  c.subject = torch::cat(s, 0);
  c.object = torch::cat(o, 0);
  c.object_class = torch::cat(cls, 0);
  c.verbs = torch::cat(v, 0);
  c.hoi = torch::cat(h, 0);
  return c;
}

// Assigned (image, query, concatenated-gt) triples for one layer.
struct Assignment {
  std::vector<int64_t> image, query, gt;
};

void add_terms(LossBreakdown& acc, const std::string& name, const torch::Tensor& value) {
  auto it = acc.terms.find(name);
  if (it == acc.terms.end()) {
    acc.terms.emplace(name, value);
  } else {
    it->second = it->second + value;
  }
}

// One layer of supervision. `row_weight` restricts the classification terms
// to rows that take part (all inference rows, valid DN rows).
void layer_loss(LossBreakdown& acc, const ModelOutput& out, int64_t layer, const Concatenated& tgt,
                const Assignment& as, const torch::Tensor& row_weight, double normalizer, const LossWeights& w) {
  const auto& obj_logits = out.object_logits[layer];
  const auto dtype = obj_logits.scalar_type();
  auto opts = obj_logits.options().requires_grad(false);
  auto b = torch::tensor(as.image, torch::kInt64);
  auto q = torch::tensor(as.query, torch::kInt64);
  auto g = torch::tensor(as.gt, torch::kInt64);

  auto obj_target = torch::zeros(obj_logits.sizes(), opts);
  auto verb_target = torch::zeros(out.verb_logits[layer].sizes(), opts);
  if (!as.image.empty()) {
    obj_target.index_put_({b, q, tgt.object_class.index_select(0, g)}, torch::ones({g.size(0)}, opts));
    verb_target.index_put_({b, q}, tgt.verbs.index_select(0, g).to(dtype));
  }
  add_terms(acc, "object",
            w.object * sigmoid_focal_loss(obj_logits, obj_target, w.focal_alpha, w.focal_gamma, row_weight) / normalizer);
  add_terms(acc, "verb",
            w.verb * sigmoid_focal_loss(out.verb_logits[layer], verb_target, w.focal_alpha, w.focal_gamma, row_weight) /
                normalizer);

  const bool last = layer + 1 == out.layers();
  if (last && out.hoi_logits.defined()) {
    auto hoi_target = torch::zeros(out.hoi_logits.sizes(), opts);
    if (!as.image.empty()) hoi_target.index_put_({b, q}, tgt.hoi.index_select(0, g).to(dtype));
    add_terms(acc, "hoi",
              w.hoi * sigmoid_focal_loss(out.hoi_logits, hoi_target, w.focal_alpha, w.focal_gamma, row_weight) /
                  normalizer);
  }

  torch::Tensor l1 = torch::zeros({}, opts);
  torch::Tensor gi = torch::zeros({}, opts);
  if (!as.image.empty()) {
    auto ps = out.subject_boxes[layer].index({b, q});
    auto po = out.object_boxes[layer].index({b, q});
    auto ts = tgt.subject.index_select(0, g).to(dtype);
    auto to = tgt.object.index_select(0, g).to(dtype);
    l1 = (ps - ts).abs().sum() + (po - to).abs().sum();
    gi = (1.0 - box_ops::elementwise_giou(ps, ts)).sum() + (1.0 - box_ops::elementwise_giou(po, to)).sum();
  }
  add_terms(acc, "l1", w.l1 * l1 / normalizer);
  add_terms(acc, "giou", w.giou * gi / normalizer);
}

void finish(LossBreakdown& acc) {
  torch::Tensor total;
  for (const auto& [name, value] : acc.terms) total = total.defined() ? total + value : value;
  acc.total = total;
}

}  // namespace

std::vector<torch::Tensor> match_costs(const ModelOutput& out, int64_t layer, const std::vector<ImageTargets>& targets,
                                       const LossWeights& w) {
  torch::NoGradGuard no_grad;
  const auto& obj_logits = out.object_logits[layer];
  const int64_t batch = obj_logits.size(0);
  const int64_t n = obj_logits.size(1);
  auto dtype = obj_logits.scalar_type();
  auto tgt = concatenate(targets, dtype);
  std::vector<torch::Tensor> result;
  if (tgt.total == 0) {
    for (int64_t i = 0; i < batch; ++i) result.push_back(torch::zeros({n, 0}, torch::kFloat64));
    return result;
  }

  auto p_obj = torch::sigmoid(obj_logits).reshape({batch * n, -1});
  auto cost = -w.object * p_obj.index_select(1, tgt.object_class);

  auto label_cost = [](const torch::Tensor& probs, const torch::Tensor& target) {
    auto pos = probs.matmul(target.t()) / target.sum(1).clamp_min(1.0).unsqueeze(0);
    auto neg = (1.0 - probs).matmul((1.0 - target).t()) / (1.0 - target).sum(1).clamp_min(1.0).unsqueeze(0);
    return -0.5 * (pos + neg);
  };
  const bool last = layer + 1 == out.layers();
  cost = cost + w.verb * label_cost(torch::sigmoid(out.verb_logits[layer]).reshape({batch * n, -1}), tgt.verbs);
  if (last && out.hoi_logits.defined()) {
    cost = cost + w.hoi * label_cost(torch::sigmoid(out.hoi_logits).reshape({batch * n, -1}), tgt.hoi);
  }
  auto ps = out.subject_boxes[layer].reshape({batch * n, 4});
  auto po = out.object_boxes[layer].reshape({batch * n, 4});
  cost = cost + w.l1 * (torch::cdist(ps, tgt.subject, 1.0) + torch::cdist(po, tgt.object, 1.0));
  cost = cost - w.giou * (box_ops::pairwise_giou(ps, tgt.subject) + box_ops::pairwise_giou(po, tgt.object));
  cost = cost.view({batch, n, tgt.total}).to(torch::kFloat64);

  for (int64_t i = 0; i < batch; ++i) {
    result.push_back(cost[i].narrow(1, tgt.offsets[i], targets[i].size()));
  }
  return result;
}

std::vector<std::vector<MatchResult>> match_batch(const ModelOutput& out, const std::vector<ImageTargets>& targets,
                                                  const LossWeights& w) {
  std::vector<std::vector<MatchResult>> result;
  for (int64_t l = 0; l < out.layers(); ++l) {
    std::vector<MatchResult> per_image;
    for (const auto& c : match_costs(out, l, targets, w)) per_image.push_back(hungarian_match(c));
    result.push_back(std::move(per_image));
  }
  return result;
}

LossBreakdown compute_losses(const ModelOutput& out, const std::vector<ImageTargets>& targets,
                             const std::vector<std::vector<MatchResult>>& matches, const LossWeights& w) {
  const auto dtype = out.object_logits.front().scalar_type();
  auto tgt = concatenate(targets, dtype);
  const double normalizer = std::max<double>(1.0, static_cast<double>(tgt.total));
  LossBreakdown acc;
  for (int64_t l = 0; l < out.layers(); ++l) {
    Assignment as;
    for (size_t i = 0; i < targets.size(); ++i) {
      for (const auto& [query, gt] : matches.at(l).at(i).pairs) {
        as.image.push_back(static_cast<int64_t>(i));
        as.query.push_back(query);
        as.gt.push_back(tgt.offsets[i] + gt);
      }
    }
    layer_loss(acc, out, l, tgt, as, {}, normalizer, w);
  }
  finish(acc);
  return acc;
}

LossBreakdown dn_losses(const ModelOutput& dn_out, const std::vector<ImageTargets>& targets,
                        const torch::Tensor& gt_index, const torch::Tensor& valid, const LossWeights& w) {
  LossBreakdown acc;
  const auto dtype = dn_out.object_logits.empty() ? torch::kFloat32 : dn_out.object_logits.front().scalar_type();
  const int64_t rows = gt_index.defined() && gt_index.numel() > 0 ? valid.sum().item<int64_t>() : 0;
  if (rows == 0 || dn_out.object_logits.empty()) {
    auto zero = torch::zeros({}, torch::TensorOptions().dtype(dtype));
    for (const char* name : {"object", "verb", "l1", "giou"}) acc.terms.emplace(name, zero);
    acc.total = zero;
    return acc;
  }
  auto tgt = concatenate(targets, dtype);
  Assignment as;
  auto gi = gt_index.accessor<int64_t, 2>();
  auto va = valid.accessor<bool, 2>();
  for (int64_t b = 0; b < gt_index.size(0); ++b) {
    for (int64_t r = 0; r < gt_index.size(1); ++r) {
      if (!va[b][r]) continue;
      const int64_t k = gi[b][r];
      if (k < 0 || k >= targets.at(b).size()) throw std::out_of_range("denoising row has an invalid gt index");
      as.image.push_back(b);
      as.query.push_back(r);
      as.gt.push_back(tgt.offsets[b] + k);
    }
  }
  auto row_weight = valid.to(dtype);
  for (int64_t l = 0; l < dn_out.layers(); ++l) {
    layer_loss(acc, dn_out, l, tgt, as, row_weight, static_cast<double>(rows), w);
  }
  finish(acc);
  return acc;
}

}  // namespace sovstg

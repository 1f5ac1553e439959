// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/denoising.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "sovstg/box_ops.hpp"

namespace sovstg {

namespace {

void check_rate(double rate, const char* name) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1], got " + std::to_string(rate));
  }
}

}  // namespace

void DNConfig::validate() const {
  check_rate(object_flip_rate, "dn.object_flip_rate");
  check_rate(verb_noise_rate, "dn.verb_noise_rate");
  check_rate(verb_flip_rate, "dn.verb_flip_rate");
  if (!(box_noise >= 0.0 && box_noise < 1.0)) throw std::invalid_argument("dn.box_noise must lie in [0,1)");
  if (groups < 1) throw std::invalid_argument("dn.groups must be >= 1");
}

int64_t flip_object_label(int64_t gt_class, double flip_rate, int64_t num_classes, std::mt19937_64& rng) {
  if (gt_class < 0 || gt_class >= num_classes) throw std::out_of_range("object class out of range");
  if (flip_rate <= 0.0) return gt_class;
  if (num_classes < 2) throw std::invalid_argument("object flipping needs at least two classes");
  std::bernoulli_distribution flip(flip_rate);
  if (!flip(rng)) return gt_class;
  std::uniform_int_distribution<int64_t> other(0, num_classes - 2);
  const int64_t pick = other(rng);
  return pick >= gt_class ? pick + 1 : pick;
}

std::vector<uint8_t> flip_verb_label(const std::vector<uint8_t>& gt, double noise_rate, double class_flip_rate,
                                     std::mt19937_64& rng) {
  if (std::none_of(gt.begin(), gt.end(), [](uint8_t b) { return b != 0; })) {
    throw std::invalid_argument("verb label has no ground-truth class");
  }
  std::vector<uint8_t> out = gt;
  if (noise_rate <= 0.0 || class_flip_rate <= 0.0) return out;
  std::bernoulli_distribution noised(noise_rate);
  if (!noised(rng)) return out;
  std::bernoulli_distribution flip(class_flip_rate);
  for (auto& bit : out) {
    if (!bit && flip(rng)) bit = 1;
  }
  return out;
}

torch::Tensor build_attention_mask(int64_t num_queries, int64_t num_instances, int64_t groups) {
  if (num_queries < 0 || num_instances < 0 || groups < 1) throw std::invalid_argument("negative mask size");
  const int64_t dn = 2 * groups * num_instances;
  const int64_t total = num_queries + dn;
  auto mask = torch::zeros({total, total}, torch::kBool);
  auto acc = mask.accessor<bool, 2>();
  for (int64_t i = 0; i < total; ++i)
    for (int64_t j = 0; j < num_queries; ++j) acc[i][j] = true;
  // DN row r of instance k, kind c, slot j sits at N_q + k*2N_p + c*N_p + j.
  for (int64_t k = 0; k < num_instances; ++k) {
    for (int64_t j = 0; j < groups; ++j) {
      const int64_t members[2] = {num_queries + k * 2 * groups + j, num_queries + k * 2 * groups + groups + j};
      for (auto a : members)
        for (auto b : members) acc[a][b] = true;
    }
  }
  return mask;
}

DNGroupBatch build_dn_queries(const std::vector<HOIInstance>& gts, const LabelEmbeddingBank& bank,
                              const DNConfig& cfg, int64_t num_queries, std::mt19937_64& rng) {
  cfg.validate();
  DNGroupBatch out;
  out.num_queries = num_queries;
  out.groups = cfg.groups;
  out.num_instances = static_cast<int64_t>(gts.size());
  const int64_t np = cfg.groups;
  const int64_t k_count = out.num_instances;
  out.mask = build_attention_mask(num_queries, k_count, np);
  if (k_count == 0) {
    out.queries = torch::zeros({0, bank->dim()}, bank->object_priors.options().requires_grad(false));
    return out;
  }

  std::vector<int64_t> object_rows;
  auto verb_rows = torch::zeros({k_count * np, bank->num_verbs()}, torch::kFloat64);
  auto verb_acc = verb_rows.accessor<double, 2>();
  out.subject_anchors.reserve(2 * np * k_count);
  out.object_anchors.reserve(2 * np * k_count);
  out.noised_objects.assign(2 * np * k_count, -1);
  out.noised_verbs.assign(2 * np * k_count, {});

  for (int64_t k = 0; k < k_count; ++k) {
    const auto& gt = gts[k];
    if (static_cast<int64_t>(gt.verbs.size()) != bank->num_verbs()) {
      throw std::invalid_argument("verb multi-hot width does not match the label bank");
    }
    for (int64_t j = 0; j < np; ++j) {
      const int64_t label = flip_object_label(gt.object_class, cfg.object_flip_rate, bank->num_objects(), rng);
      object_rows.push_back(label);
      out.noised_objects[k * 2 * np + j] = label;
    }
    for (int64_t j = 0; j < np; ++j) {
      auto noised = flip_verb_label(gt.verbs, cfg.verb_noise_rate, cfg.verb_flip_rate, rng);
      for (size_t v = 0; v < noised.size(); ++v) verb_acc[k * np + j][v] = noised[v] ? 1.0 : 0.0;
      out.noised_verbs[k * 2 * np + np + j] = std::move(noised);
    }
    for (int64_t r = 0; r < 2 * np; ++r) {
      out.subject_anchors.push_back(noise_box(gt.subject, cfg.box_noise, rng));
      out.object_anchors.push_back(noise_box(gt.object, cfg.box_noise, rng));
      out.gt_index.push_back(k);
    }
  }

  auto index = torch::tensor(object_rows, torch::kInt64);
  auto object_part = bank->object_priors.index_select(0, index).view({k_count, np, bank->dim()});
  auto verb_part = encode_verb_multihot(bank, verb_rows).view({k_count, np, bank->dim()});
  out.queries = torch::cat({object_part, verb_part}, 1).view({2 * np * k_count, bank->dim()});
  return out;
}

torch::Tensor inference_only_mask(int64_t batch, int64_t num_queries) {
  return torch::ones({batch, num_queries, num_queries}, torch::kBool);
}

PaddedDN pad_dn_batches(const std::vector<DNGroupBatch>& batches, int64_t num_queries, int64_t dim,
                        torch::TensorOptions options) {
  PaddedDN out;
  const auto batch = static_cast<int64_t>(batches.size());
  int64_t longest = 0;
  for (const auto& b : batches) longest = std::max(longest, b.size());
  const int64_t total = num_queries + longest;

  auto mask = torch::zeros({batch, total, total}, torch::kBool);
  auto valid = torch::zeros({batch, longest}, torch::kBool);
  auto gt_index = torch::full({batch, longest}, -1, torch::kInt64);
  // Padding anchors sit at the image centre; they never reach a loss.
  auto subject = torch::full({batch, longest, 4}, 0.5, torch::kFloat64);
  auto object = torch::full({batch, longest, 4}, 0.5, torch::kFloat64);
  std::vector<torch::Tensor> rows;
  rows.reserve(batch);
  for (int64_t b = 0; b < batch; ++b) {
    const auto& dn = batches[b];
    const int64_t m = dn.size();
    mask[b].narrow(0, 0, num_queries + m).narrow(1, 0, num_queries + m).copy_(dn.mask);
    for (int64_t r = m; r < longest; ++r) {
      mask[b][num_queries + r][num_queries + r] = true;
    }
    if (m > 0) {
      valid[b].narrow(0, 0, m).fill_(true);
      gt_index[b].narrow(0, 0, m).copy_(torch::tensor(dn.gt_index, torch::kInt64));
      subject[b].narrow(0, 0, m).copy_(box_ops::to_tensor(dn.subject_anchors, torch::kFloat64));
      object[b].narrow(0, 0, m).copy_(box_ops::to_tensor(dn.object_anchors, torch::kFloat64));
    }
    auto q = dn.queries.defined() && m > 0 ? dn.queries.to(options.dtype())
                                           : torch::zeros({0, dim}, options);
    if (m < longest) q = torch::cat({q, torch::zeros({longest - m, dim}, options)}, 0);
    rows.push_back(q);
  }
  out.queries = batch > 0 ? torch::stack(rows, 0) : torch::zeros({0, 0, dim}, options);
  out.subject_anchors = subject.to(options.dtype());
  out.object_anchors = object.to(options.dtype());
  out.valid = valid;
  out.gt_index = gt_index;
  out.mask = mask;
  return out;
}

}  // namespace sovstg

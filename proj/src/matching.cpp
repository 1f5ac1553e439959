// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sovstg {

MatchResult hungarian_match(const std::vector<std::vector<double>>& cost) {
  MatchResult result;
  const auto queries = static_cast<int64_t>(cost.size());
  const int64_t gts = queries == 0 ? 0 : static_cast<int64_t>(cost.front().size());
  if (gts == 0) return result;
  if (gts > queries) throw std::invalid_argument("more ground truths than queries");
  for (const auto& row : cost) {
    if (static_cast<int64_t>(row.size()) != gts) throw std::invalid_argument("ragged cost matrix");
    for (double c : row)
      if (!std::isfinite(c)) throw std::invalid_argument("cost matrix has a non-finite entry");
  }

  // Shortest augmenting path on the transposed problem: ground truths are
  // rows (n) and queries columns (m >= n). Arrays are 1-based; index 0 is the
  // virtual source column.
  const int64_t n = gts;
  const int64_t m = queries;
  const double inf = std::numeric_limits<double>::infinity();
  auto a = [&](int64_t i, int64_t j) { return cost[j - 1][i - 1]; };
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int64_t> owner(m + 1, 0), way(m + 1, 0);
  for (int64_t i = 1; i <= n; ++i) {
    owner[0] = i;
    int64_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int64_t i0 = owner[j0];
      double delta = inf;
      int64_t j1 = 0;
      for (int64_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int64_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const int64_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int64_t j = 1; j <= m; ++j) {
    if (owner[j] != 0) {
      result.pairs.emplace_back(j - 1, owner[j] - 1);
      result.total_cost += cost[j - 1][owner[j] - 1];
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  return result;
}

MatchResult hungarian_match(const torch::Tensor& cost) {
  auto c = cost.detach().to(torch::kFloat64).contiguous();
  if (c.dim() != 2) throw std::invalid_argument("cost matrix must be 2-D");
  std::vector<std::vector<double>> rows(c.size(0), std::vector<double>(c.size(1)));
  auto acc = c.accessor<double, 2>();
  for (int64_t i = 0; i < c.size(0); ++i)
    for (int64_t j = 0; j < c.size(1); ++j) rows[i][j] = acc[i][j];
  if (c.size(1) == 0) return {};
  return hungarian_match(rows);
}

double multilabel_score_cost(const std::vector<double>& probs, const std::vector<uint8_t>& target) {
  double pos = 0.0, neg = 0.0, npos = 0.0, nneg = 0.0;
  for (size_t c = 0; c < probs.size(); ++c) {
    if (target.at(c)) {
      pos += probs[c];
      npos += 1.0;
    } else {
      neg += 1.0 - probs[c];
      nneg += 1.0;
    }
  }
  const double a = npos > 0.0 ? pos / npos : 0.0;
  const double b = nneg > 0.0 ? neg / nneg : 0.0;
  return -0.5 * (a + b);
}

double hoi_match_cost(const PredictionView& p, const HOIInstance& gt, const LossWeights& w,
                      const std::vector<uint8_t>& gt_hoi) {
  double cost = -w.object * p.object_probs.at(gt.object_class);
  cost += w.verb * multilabel_score_cost(p.verb_probs, gt.verbs);
  if (!p.hoi_probs.empty() && !gt_hoi.empty()) cost += w.hoi * multilabel_score_cost(p.hoi_probs, gt_hoi);
  auto l1 = [](const Box& a, const Box& b) {
    return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) + std::abs(a.h - b.h);
  };
  cost += w.l1 * (l1(p.subject, gt.subject) + l1(p.object, gt.object));
  cost -= w.giou * (giou(p.subject, gt.subject) + giou(p.object, gt.object));
  return cost;
}

}  // namespace sovstg

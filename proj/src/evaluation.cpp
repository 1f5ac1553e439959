// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace sovstg {

EvalSetting parse_eval_setting(const std::string& name) {
  if (name == "default") return EvalSetting::kDefault;
  if (name == "known-object" || name == "known_object") return EvalSetting::kKnownObject;
  throw std::invalid_argument("unknown evaluation setting '" + name + "'");
}

std::string to_string(EvalSetting setting) {
  return setting == EvalSetting::kDefault ? "default" : "known-object";
}

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) throw std::invalid_argument("eval.iou_threshold must be in (0,1)");
  if (rare_threshold < 1) throw std::invalid_argument("eval.rare_threshold must be >= 1");
}

bool triplet_match(const Detection& pred, const GroundTruthTriplet& gt, double iou_threshold) {
  if (pred.hoi_class != gt.hoi_class) return false;
  return std::min(iou(pred.subject, gt.subject), iou(pred.object, gt.object)) >= iou_threshold;
}

std::vector<GroundTruthTriplet> ground_truth_triplets(const std::vector<ImageAnnotation>& images,
                                                      const Vocabulary& vocab) {
  std::vector<GroundTruthTriplet> out;
  for (const auto& img : images) {
    for (const auto& h : img.hois) {
      for (auto v : h.verb_indices()) {
        const auto cls = vocab.hoi_index(h.object_class, v);
        if (cls < 0) continue;  // combination never seen in training
        out.push_back({img.id, h.subject, h.object, cls});
      }
    }
  }
  return out;
}

std::vector<int64_t> hoi_class_counts(const std::vector<ImageAnnotation>& images, const Vocabulary& vocab) {
  std::vector<int64_t> counts(vocab.num_hoi(), 0);
  for (const auto& t : ground_truth_triplets(images, vocab)) ++counts[t.hoi_class];
  return counts;
}

double average_precision(const std::vector<uint8_t>& tp, int64_t positives, ApInterpolation mode) {
  if (positives <= 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> recall, precision;
  double cum_tp = 0.0;
  for (size_t i = 0; i < tp.size(); ++i) {
    cum_tp += tp[i] ? 1.0 : 0.0;
    recall.push_back(cum_tp / static_cast<double>(positives));
    precision.push_back(cum_tp / static_cast<double>(i + 1));
  }
  if (mode == ApInterpolation::kElevenPoint) {
    double ap = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double thr = t / 10.0;
      double best = 0.0;
      for (size_t i = 0; i < recall.size(); ++i)
        if (recall[i] >= thr - 1e-12) best = std::max(best, precision[i]);
      ap += best / 11.0;
    }
    return ap;
  }
  std::vector<double> mrec{0.0}, mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (size_t i = 0; i + 1 < mrec.size(); ++i) ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
  return ap;
}

std::vector<std::vector<int64_t>> evaluation_pools(const std::vector<ImageAnnotation>& images,
                                                   const Vocabulary& vocab, EvalSetting setting) {
  std::vector<std::vector<int64_t>> pools(vocab.num_hoi());
  for (int64_t c = 0; c < vocab.num_hoi(); ++c) {
    const auto object = vocab.hoi_classes[c].first;
    for (const auto& img : images) {
      const bool has_object = std::any_of(img.hois.begin(), img.hois.end(),
                                          [&](const HOIInstance& h) { return h.object_class == object; });
      if (setting == EvalSetting::kDefault || has_object) pools[c].push_back(img.id);
    }
  }
  return pools;
}

MapResult evaluate_map(const std::vector<Detection>& detections, const std::vector<ImageAnnotation>& images,
                       const Vocabulary& vocab, const std::vector<int64_t>& train_counts, const EvalConfig& cfg) {
  cfg.validate();
  const int64_t classes = vocab.num_hoi();
  if (static_cast<int64_t>(train_counts.size()) != classes) {
    throw std::invalid_argument("train counts must cover every HOI class");
  }
  const auto gts = ground_truth_triplets(images, vocab);
  const auto pools = evaluation_pools(images, vocab, cfg.setting);

  // Ground-truth indices per (class, image).
  std::vector<std::unordered_map<int64_t, std::vector<size_t>>> gt_by_class(classes);
  for (size_t i = 0; i < gts.size(); ++i) gt_by_class[gts[i].hoi_class][gts[i].image_id].push_back(i);
  std::vector<std::vector<size_t>> det_by_class(classes);
  for (size_t i = 0; i < detections.size(); ++i) {
    const auto c = detections[i].hoi_class;
    if (c < 0 || c >= classes) throw std::out_of_range("detection HOI class out of range");
    det_by_class[c].push_back(i);
  }

  MapResult result;
  result.class_ap.assign(classes, std::numeric_limits<double>::quiet_NaN());
  result.class_rare.assign(classes, 0);
  result.class_valid.assign(classes, 0);
  for (int64_t c = 0; c < classes; ++c) {
    result.class_rare[c] = train_counts[c] < cfg.rare_threshold ? 1 : 0;
    const std::unordered_set<int64_t> pool(pools[c].begin(), pools[c].end());
    int64_t positives = 0;
    for (const auto& [image, list] : gt_by_class[c])
      if (pool.count(image)) positives += static_cast<int64_t>(list.size());
    if (positives == 0) continue;
    result.class_valid[c] = 1;

    std::vector<size_t> ranked;
    for (auto d : det_by_class[c])
      if (pool.count(detections[d].image_id)) ranked.push_back(d);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](size_t a, size_t b) { return detections[a].score > detections[b].score; });

    std::unordered_set<size_t> used;
    std::vector<uint8_t> tp;
    tp.reserve(ranked.size());
    for (auto d : ranked) {
      const auto& det = detections[d];
      double best = -1.0;
      size_t best_gt = 0;
      auto it = gt_by_class[c].find(det.image_id);
      if (it != gt_by_class[c].end()) {
        for (auto g : it->second) {
          if (used.count(g)) continue;
          const double overlap = std::min(iou(det.subject, gts[g].subject), iou(det.object, gts[g].object));
          if (overlap > best) {
            best = overlap;
            best_gt = g;
          }
        }
      }
      if (best >= cfg.iou_threshold) {
        used.insert(best_gt);
        tp.push_back(1);
      } else {
        tp.push_back(0);
      }
    }
    result.class_ap[c] = average_precision(tp, positives, cfg.interpolation);
  }

  auto mean_over = [&](auto keep) {
    double sum = 0.0;
    int64_t n = 0;
    for (int64_t c = 0; c < classes; ++c) {
      if (!result.class_valid[c] || !keep(c)) continue;
      sum += result.class_ap[c];
      ++n;
    }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  };
  result.full = mean_over([](int64_t) { return true; });
  result.rare = mean_over([&](int64_t c) { return result.class_rare[c] != 0; });
  result.non_rare = mean_over([&](int64_t c) { return result.class_rare[c] == 0; });
  return result;
}

namespace {

nlohmann::json box_to_json(const Box& b) { return nlohmann::json::array({b.cx, b.cy, b.w, b.h}); }

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [cx, cy, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

std::string to_json_line(const QueryPrediction& p) {
  nlohmann::json j;
  j["image_id"] = p.image_id;
  j["subject"] = box_to_json(p.subject);
  j["object"] = box_to_json(p.object);
  j["object_class"] = p.object_class;
  j["object_score"] = p.object_score;
  j["verb_scores"] = p.verb_scores;
  j["hoi_scores"] = p.hoi_scores;
  return j.dump();
}

QueryPrediction parse_prediction_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  QueryPrediction p;
  p.image_id = j.at("image_id").get<int64_t>();
  p.subject = box_from_json(j.at("subject"));
  p.object = box_from_json(j.at("object"));
  p.object_class = j.at("object_class").get<int64_t>();
  p.object_score = j.at("object_score").get<double>();
  p.verb_scores = j.at("verb_scores").get<std::vector<double>>();
  p.hoi_scores = j.value("hoi_scores", std::vector<double>{});
  return p;
}

void write_predictions(const std::string& path, const std::vector<QueryPrediction>& predictions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& p : predictions) out << to_json_line(p) << "\n";
}

std::vector<QueryPrediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<QueryPrediction> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_prediction_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Detection> detections_from_predictions(const std::vector<QueryPrediction>& predictions,
                                                   const Vocabulary& vocab, bool use_hoi, int64_t top_k) {
  std::vector<std::vector<int64_t>> classes_of_object(vocab.num_objects());
  for (int64_t c = 0; c < vocab.num_hoi(); ++c) classes_of_object.at(vocab.hoi_classes[c].first).push_back(c);

  std::map<int64_t, std::vector<Detection>> per_image;
  for (const auto& p : predictions) {
    if (p.object_class < 0 || p.object_class >= vocab.num_objects()) throw std::out_of_range("object class out of range");
    auto& bucket = per_image[p.image_id];
    for (auto c : classes_of_object[p.object_class]) {
      const double s = use_hoi ? p.hoi_scores.at(c) : p.verb_scores.at(vocab.hoi_classes[c].second);
      bucket.push_back({p.image_id, p.subject, p.object, c, s * p.object_score});
    }
  }
  std::vector<Detection> out;
  for (auto& [image, dets] : per_image) {
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (static_cast<int64_t>(dets.size()) > top_k) dets.resize(top_k);
    out.insert(out.end(), dets.begin(), dets.end());
  }
  return out;
}

std::string map_csv(const MapResult& result, EvalSetting setting, bool header) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  if (header) os << "setting,category,mAP\n";
  const auto name = to_string(setting);
  os << name << ",full," << result.full << "\n";
  os << name << ",rare," << result.rare << "\n";
  os << name << ",non_rare," << result.non_rare << "\n";
  return os.str();
}

}  // namespace sovstg

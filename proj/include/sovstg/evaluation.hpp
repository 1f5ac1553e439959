// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sovstg/geometry.hpp"
#include "sovstg/types.hpp"

namespace sovstg {

enum class EvalSetting { kDefault, kKnownObject };
enum class ApInterpolation { kAllPoint, kElevenPoint };

EvalSetting parse_eval_setting(const std::string& name);
std::string to_string(EvalSetting setting);

struct EvalConfig {
  double iou_threshold = 0.5;
  int64_t rare_threshold = 10;  // HOI classes with fewer training instances are Rare
  EvalSetting setting = EvalSetting::kDefault;
  ApInterpolation interpolation = ApInterpolation::kAllPoint;

  void validate() const;
};

/// One scored HOI triplet.
struct Detection {
  int64_t image_id = 0;
  Box subject;
  Box object;
  int64_t hoi_class = 0;
  double score = 0.0;
};

/// Ground-truth triplet with its HOI class.
struct GroundTruthTriplet {
  int64_t image_id = 0;
  Box subject;
  Box object;
  int64_t hoi_class = 0;
};

/// True iff the HOI classes agree and both the subject and object IoU reach
/// the threshold.
bool triplet_match(const Detection& pred, const GroundTruthTriplet& gt, double iou_threshold);

/// Expands every annotated instance into one triplet per verb.
std::vector<GroundTruthTriplet> ground_truth_triplets(const std::vector<ImageAnnotation>& images,
                                                      const Vocabulary& vocab);

/// Training-split instance count per HOI class.
std::vector<int64_t> hoi_class_counts(const std::vector<ImageAnnotation>& images, const Vocabulary& vocab);

struct MapResult {
  double full = 0.0;
  double rare = 0.0;
  double non_rare = 0.0;
  std::vector<double> class_ap;      // per HOI class, NaN when excluded
  std::vector<uint8_t> class_rare;   // per HOI class
  std::vector<uint8_t> class_valid;  // has at least one ground truth in its pool
};

/// Average precision of one ranked list of true/false positives given the
/// number of positives.
double average_precision(const std::vector<uint8_t>& true_positive, int64_t positives, ApInterpolation mode);

/// Per-class images that take part in the evaluation. Default: every image.
/// Known-Object: images annotated with the class's object category.
std::vector<std::vector<int64_t>> evaluation_pools(const std::vector<ImageAnnotation>& images,
                                                   const Vocabulary& vocab, EvalSetting setting);

/// HOI detection mAP with Full/Rare/Non-Rare splits. `train_counts` decides
/// rarity. Classes without ground truth in their pool are excluded from every
/// mean.
MapResult evaluate_map(const std::vector<Detection>& detections, const std::vector<ImageAnnotation>& images,
                       const Vocabulary& vocab, const std::vector<int64_t>& train_counts, const EvalConfig& cfg);

/// Raw per-query output, one JSON line in a prediction file.
struct QueryPrediction {
  int64_t image_id = 0;
  Box subject;
  Box object;
  int64_t object_class = 0;
  double object_score = 0.0;
  std::vector<double> verb_scores;
  std::vector<double> hoi_scores;  // empty without the advisor
};

std::string to_json_line(const QueryPrediction& p);
QueryPrediction parse_prediction_line(const std::string& line);
void write_predictions(const std::string& path, const std::vector<QueryPrediction>& predictions);
std::vector<QueryPrediction> read_predictions(const std::string& path);

/// Expands query predictions into scored triplets. A query proposes every HOI
/// class of its predicted object; the score is the object score times either
/// the HOI score (`use_hoi`) or the verb score. Keeps the `top_k` best per
/// image.
std::vector<Detection> detections_from_predictions(const std::vector<QueryPrediction>& predictions,
                                                   const Vocabulary& vocab, bool use_hoi, int64_t top_k);

/// Rows "setting,category,mAP" for the CSV report.
std::string map_csv(const MapResult& result, EvalSetting setting, bool header = true);

}  // namespace sovstg

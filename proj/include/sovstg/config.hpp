// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sovstg/denoising.hpp"
#include "sovstg/evaluation.hpp"
#include "sovstg/matching.hpp"
#include "sovstg/model.hpp"

namespace sovstg {

/// Flat `key = value` document. `#` starts a comment; blank lines are
/// ignored; a repeated key is an error.
class KeyValueDocument {
 public:
  static KeyValueDocument parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueDocument load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws std::invalid_argument naming every key that was never read.
  void reject_unused() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

bool parse_bool(const std::string& text);

struct OptimConfig {
  double lr = 4e-4;
  double weight_decay = 1e-4;
  int64_t batch_size = 8;
  int64_t epochs = 50;
  double lr_drop_fraction = 2.0 / 3.0;  // single step decay at this fraction of the epochs
  double lr_drop_factor = 0.1;
  double grad_clip = 0.1;
};

enum class ScoreMode { kAuto, kHoi, kVerb };

/// Everything a training run needs besides the data.
struct RunConfig {
  std::string name = "run";
  std::string preset = "toy-S";
  ModelConfig model;
  DNConfig dn;
  bool stg = true;  // denoising queries on/off
  bool text_init = true;
  LossWeights loss;
  EvalConfig eval;
  ScoreMode score = ScoreMode::kAuto;
  OptimConfig optim;
  uint64_t seed = 1;
  std::string provider = "stub";
  std::string init_from;
  int64_t max_train_images = 0;  // 0 = all
  double stop_at_map = 0.0;      // stop once Full mAP reaches this (0 = never)
  int64_t eval_every = 1;
  int64_t top_k = 100;  // detections kept per image

  void validate() const;
};

/// Model sizes of a named preset ("toy-S", "toy-XS").
void apply_preset(RunConfig& cfg, const std::string& preset);

/// Applies one documented key. Throws std::invalid_argument on an unknown
/// key or malformed value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Every documented key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

RunConfig run_config_from(const KeyValueDocument& doc);
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);
std::string to_text(const RunConfig& cfg);

/// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

std::string to_string(ScoreMode mode);
ScoreMode parse_score_mode(const std::string& text);

/// Score rule in effect: auto picks HOI scores when the advisor is on.
ScoreMode effective_score_mode(const RunConfig& cfg);

}  // namespace sovstg

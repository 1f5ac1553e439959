// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sovstg/advisor.hpp"
#include "sovstg/config.hpp"
#include "sovstg/evaluation.hpp"
#include "sovstg/losses.hpp"
#include "sovstg/model.hpp"
#include "sovstg/synthetic.hpp"

namespace sovstg {

/// Header tag of the metrics CSV; bump when the columns change.
inline constexpr const char* kMetricsFormat = "# sovstg-metrics v1";
inline constexpr const char* kMetricsColumns =
    "epoch,lr,loss_total,loss_object,loss_verb,loss_hoi,loss_l1,loss_giou,loss_dn,full,rare,non_rare";

struct EpochRecord {
  int64_t epoch = 0;  // 1-based
  double lr = 0.0;
  std::map<std::string, double> losses;  // mean per batch: total, object, verb, hoi, l1, giou, dn
  bool evaluated = false;
  MapResult map;
};

std::string metrics_csv_row(const EpochRecord& r);

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  bool save_checkpoints = true;
  bool verbose = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double best_full = 0.0;
  int64_t best_epoch = 0;
  double seconds = 0.0;
  std::filesystem::path metrics_csv;
  std::filesystem::path checkpoint;
};

/// Frozen advisor tokens for every image of a split, (N, N_ga, D_a).
torch::Tensor advisor_tokens_for(const AdvisorProvider& provider, const torch::Tensor& pixels);

/// Raw per-query predictions of the inference queries on a split.
std::vector<QueryPrediction> predict(SovStgModel& model, const DatasetSplit& split, const torch::Tensor& advisor_tokens,
                                     int64_t batch_size = 32);

/// Scores a split: predict, expand to triplets, evaluate.
MapResult evaluate_split(SovStgModel& model, const DatasetSplit& split, const torch::Tensor& advisor_tokens,
                         const RunConfig& cfg, const std::vector<int64_t>& train_counts, EvalSetting setting);

/// Copies every parameter of `model` whose name and shape match one in the
/// checkpoint. Returns the number of tensors copied.
int64_t init_from_checkpoint(const std::filesystem::path& path, SovStgModel& model);

/// One training run. Owns the model, optimizer and the run's rng stream.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, const DatasetSplit& train, const DatasetSplit& test);

  /// One optimisation step on the given training-image indices.
  LossBreakdown step(const std::vector<int64_t>& indices);

  /// Trains one epoch (1-based index) and evaluates when due.
  EpochRecord run_epoch(int64_t epoch);

  TrainResult fit(const TrainOptions& options);

  SovStgModel& model() { return model_; }
  const RunConfig& config() const { return cfg_; }
  const std::vector<int64_t>& train_counts() const { return train_counts_; }
  std::mt19937_64& rng() { return rng_; }

  /// Batch introspection: DN rows of the last step and of all steps so far.
  int64_t last_dn_rows() const { return last_dn_rows_; }
  int64_t total_dn_rows() const { return total_dn_rows_; }

  double learning_rate(int64_t epoch) const;
  MapResult evaluate(EvalSetting setting);

 private:
  std::vector<int64_t> epoch_order();
  [[noreturn]] void dump_non_finite(const std::vector<int64_t>& indices, const LossBreakdown& inf,
                                    const LossBreakdown& dn) const;

  RunConfig cfg_;
  const DatasetSplit& train_;
  const DatasetSplit& test_;
  std::vector<int64_t> train_indices_;
  std::vector<ImageTargets> targets_;
  std::vector<int64_t> train_counts_;
  std::shared_ptr<AdvisorProvider> provider_;
  torch::Tensor train_tokens_, test_tokens_;
  SovStgModel model_{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  std::mt19937_64 rng_;
  int64_t current_epoch_ = 0;
  int64_t last_dn_rows_ = 0;
  int64_t total_dn_rows_ = 0;
  std::filesystem::path dump_dir_;
};

/// Convenience wrapper: build a Trainer and fit.
TrainResult train(const RunConfig& cfg, const DatasetSplit& train, const DatasetSplit& test,
                  const TrainOptions& options);

}  // namespace sovstg

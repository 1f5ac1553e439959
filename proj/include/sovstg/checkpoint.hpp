// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "sovstg/config.hpp"
#include "sovstg/model.hpp"
#include "sovstg/types.hpp"

namespace sovstg {

constexpr int64_t kCheckpointFormat = 1;

/// Everything stored next to the parameters.
struct CheckpointMeta {
  int64_t format_version = kCheckpointFormat;
  int64_t epoch = 0;
  std::string config_text;  // RunConfig as key = value lines
  std::string vocab_json;   // vocabulary (annotation JSON without images)
  std::string rng_state;    // textual std::mt19937_64 state
};

/// Writes parameters, buffers, optional optimizer state and metadata into a
/// single torch archive.
void save_checkpoint(const std::filesystem::path& path, SovStgModel& model, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta);

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

/// Loads into an already-constructed model of matching shape. Throws
/// std::runtime_error on a format-version mismatch.
CheckpointMeta load_checkpoint(const std::filesystem::path& path, SovStgModel& model,
                               torch::optim::Optimizer* optimizer = nullptr);

/// Builds the model described by the checkpoint's config and vocabulary, then
/// loads its weights.
struct LoadedModel {
  RunConfig config;
  Vocabulary vocab;
  SovStgModel model{nullptr};
  CheckpointMeta meta;
};
LoadedModel load_model(const std::filesystem::path& path);

std::string rng_to_string(const std::mt19937_64& rng);
void rng_from_string(std::mt19937_64& rng, const std::string& state);

/// Model hyper-parameters of a run for a given vocabulary.
ModelConfig model_config_for(const RunConfig& cfg, const Vocabulary& vocab);

}  // namespace sovstg

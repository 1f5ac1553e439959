// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sovstg/config.hpp"
#include "sovstg/synthetic.hpp"

namespace sovstg {

/// A named set of config overrides.
struct Variant {
  std::string name;
  std::vector<std::string> overrides;  // key=value
};

/// Built-in variant tables: "table3" (module contributions), "table4" (verb
/// box), "table6" (denoising strategies), "vla" (advisor ablations).
std::vector<std::string> builtin_tables();
std::vector<Variant> builtin_variants(const std::string& table);

/// Variants file: one `<name> key=value ...` per line, or `@<table>` to pull
/// in a built-in table. `#` starts a comment.
std::vector<Variant> parse_variants(const std::string& text);
std::vector<Variant> load_variants(const std::filesystem::path& path);

/// Base config with the variant applied and validated; the run name becomes
/// the variant name.
RunConfig apply_variant(const RunConfig& base, const Variant& variant);

struct AblationRow {
  std::string variant;
  double full = 0.0;
  double rare = 0.0;
  double non_rare = 0.0;
  double best_full = 0.0;
  int64_t epochs_to_best = 0;
  int64_t epochs = 0;
};

/// Trains every variant with the base config's seed. Per-variant outputs go
/// to out_dir/<variant> when out_dir is non-empty.
std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<Variant>& variants,
                                      const DatasetSplit& train, const DatasetSplit& test,
                                      const std::filesystem::path& out_dir, bool verbose);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace sovstg

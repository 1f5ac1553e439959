// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sovstg {

/// One parsed metrics CSV.
struct MetricsTable {
  std::string run;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Column index; throws std::invalid_argument naming the run when missing.
  size_t column(const std::string& name) const;
};

/// Parses a metrics CSV written by the trainer. The run name is the parent
/// directory for files called metrics.csv, otherwise the file stem. Throws
/// std::invalid_argument naming the file when required columns are missing.
MetricsTable read_metrics_csv(const std::filesystem::path& path);

/// Long-format CSV with columns run,epoch,metric,value over the given metrics.
std::string tidy_csv(const std::vector<MetricsTable>& tables,
                     const std::vector<std::string>& metrics = {"full", "rare", "non_rare"});

/// SVG line chart of `metric` against epoch, one labelled curve per run.
std::string render_svg(const std::vector<MetricsTable>& tables, const std::string& metric = "full");

/// Writes the SVG to `out` and the tidy CSV next to it (same stem, .csv).
void emit_curves(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out);

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/curves.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sovstg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double parse_cell(const std::string& cell) {
  if (cell == "nan" || cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(cell);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

size_t MetricsTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument(run + ": missing column '" + name + "'");
  return static_cast<size_t>(it - columns.begin());
}

MetricsTable read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read metrics file " + path.string());
  MetricsTable t;
  t.run = path.filename() == "metrics.csv" && path.has_parent_path() ? path.parent_path().filename().string()
                                                                      : path.stem().string();
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("# sovstg-metrics", 0) == 0 && line != "# sovstg-metrics v1") {
        throw std::invalid_argument(path.string() + ": unsupported metrics format '" + line + "'");
      }
      continue;
    }
    auto cells = split_csv(line);
    if (!header) {
      t.columns = cells;
      header = true;
      for (const char* required : {"epoch", "full"}) {
        if (std::find(cells.begin(), cells.end(), required) == cells.end()) {
          throw std::invalid_argument(path.string() + ": missing column '" + required + "'");
        }
      }
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": wrong number of cells");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(parse_cell(c));
      } catch (const std::exception&) {
        throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw std::invalid_argument(path.string() + ": no header row");
  return t;
}

std::string tidy_csv(const std::vector<MetricsTable>& tables, const std::vector<std::string>& metrics) {
  std::ostringstream os;
  os << "run,epoch,metric,value\n";
  for (const auto& t : tables) {
    const auto e = t.column("epoch");
    std::vector<size_t> cols;
    for (const auto& m : metrics) cols.push_back(t.column(m));
    for (const auto& row : t.rows) {
      for (size_t i = 0; i < metrics.size(); ++i) {
        const double v = row[cols[i]];
        os << t.run << "," << static_cast<int64_t>(row[e]) << "," << metrics[i] << ",";
        if (std::isnan(v)) {
          os << "nan";
        } else {
          os << v;
        }
        os << "\n";
      }
    }
  }
  return os.str();
}

std::string render_svg(const std::vector<MetricsTable>& tables, const std::string& metric) {
  const double width = 640, height = 420, left = 60, right = 170, top = 30, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  double max_epoch = 1.0;
  for (const auto& t : tables) {
    const auto e = t.column("epoch");
    for (const auto& r : t.rows) max_epoch = std::max(max_epoch, r[e]);
  }
  auto x = [&](double epoch) { return left + pw * epoch / max_epoch; };
  auto y = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::ostringstream os;
  os.precision(2);
  os << std::fixed;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    os << "<line x1=\"" << left << "\" y1=\"" << y(v) << "\" x2=\"" << left + pw << "\" y2=\"" << y(v)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
  }
  const int ticks = static_cast<int>(std::min(10.0, max_epoch));
  for (int i = 0; i <= ticks; ++i) {
    const double e = max_epoch * i / std::max(1, ticks);
    os << "<text x=\"" << x(e) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << static_cast<int64_t>(std::lround(e)) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">epoch</text>\n";
  os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + ph / 2
     << ")\">mAP (" << escape_xml(metric) << ")</text>\n";
  for (size_t k = 0; k < tables.size(); ++k) {
    const auto& t = tables[k];
    const auto e = t.column("epoch");
    const auto m = t.column(metric);
    const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : t.rows) {
      if (std::isnan(r[m])) continue;
      os << x(r[e]) << "," << y(r[m]) << " ";
    }
    os << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 32 << "\" y2=\""
       << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text class=\"label\" x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << escape_xml(t.run)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_curves(const std::vector<fs::path>& runs, const fs::path& out) {
  if (runs.empty()) throw std::invalid_argument("plot needs at least one metrics CSV");
  std::vector<MetricsTable> tables;
  std::set<std::string> names;
  for (const auto& p : runs) {
    auto t = read_metrics_csv(p);
    for (const char* required : {"rare", "non_rare"}) {
      if (std::find(t.columns.begin(), t.columns.end(), required) == t.columns.end()) {
        throw std::invalid_argument(p.string() + ": missing column '" + required + "'");
      }
    }
    // Keep run labels unique when two files share a name.
    const auto base = t.run;
    for (int i = 2; names.count(t.run); ++i) t.run = base + "-" + std::to_string(i);
    names.insert(t.run);
    tables.push_back(std::move(t));
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out) << render_svg(tables);
  auto csv = out;
  csv.replace_extension(".csv");
  std::ofstream(csv) << tidy_csv(tables);
}

}  // namespace sovstg

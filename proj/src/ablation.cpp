// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/ablation.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sovstg/trainer.hpp"

namespace sovstg {

namespace {

std::vector<std::string> modules(bool sdec, bool vdec, bool so, bool stg, bool vla) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {"switch.sdec=" + b(sdec), "switch.vdec=" + b(vdec), "switch.so_attention=" + b(so), "switch.stg=" + b(stg),
          "switch.vla=" + b(vla)};
}

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Noise switches of the denoising table at the default rates.
std::vector<std::string> noise(bool box, bool obj, bool verb) {
  const DNConfig d;
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  return {"dn.delta_b=" + num(box ? d.box_noise : 0.0), "dn.eta_o=" + num(obj ? d.object_flip_rate : 0.0),
          "dn.eta_v=" + num(verb ? d.verb_noise_rate : 0.0)};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::vector<std::string> builtin_tables() { return {"table3", "table4", "table6", "vla"}; }

std::vector<Variant> builtin_variants(const std::string& table) {
  const auto full = modules(true, true, true, true, false);
  if (table == "table3") {
    return {
        {"t3-1-odec-vdec-stg", modules(false, true, false, true, false)},
        {"t3-2-odec-sdec-stg", modules(true, false, false, true, false)},
        {"t3-3-odec", modules(false, false, false, false, false)},
        {"t3-4-odec-sdec", modules(true, false, false, false, false)},
        {"t3-5-sov", modules(true, true, false, false, false)},
        {"t3-6-sov-stg", modules(true, true, false, true, false)},
        {"t3-7-sov-soattn-stg", full},
        {"t3-8-no-vdec-vla", modules(true, false, true, true, true)},
        {"t3-9-sov-stg-vla", modules(true, true, true, true, true)},
    };
  }
  if (table == "table4") {
    return {
        {"t4-1-object-box", join(full, {"switch.verb_box=object"})},
        {"t4-2-subject-box", join(full, {"switch.verb_box=subject"})},
        {"t4-3-mbr", join(full, {"switch.verb_box=mbr"})},
        {"t4-4-smbr", join(full, {"switch.verb_box=smbr"})},
        {"t4-5-asmbr", join(full, {"switch.verb_box=asmbr"})},
    };
  }
  if (table == "table6") {
    return {
        {"t6-1-no-noise", join(full, noise(false, false, false))},
        {"t6-2-box", join(full, noise(true, false, false))},
        {"t6-3-box-verb", join(full, noise(true, false, true))},
        {"t6-4-obj-verb", join(full, noise(false, true, true))},
        {"t6-5-box-obj", join(full, noise(true, true, false))},
        {"t6-6-box-obj-verb", join(full, noise(true, true, true))},
    };
  }
  if (table == "vla") {
    const auto vla = modules(true, true, true, true, true);
    auto row = [&](bool pred, bool text, bool pe) {
      auto b = [](bool v) { return std::string(v ? "true" : "false"); };
      return join(vla, {"switch.vla_verb_prediction=" + b(pred), "switch.text_init=" + b(text),
                        "switch.box_pe=" + b(pe)});
    };
    return {
        {"vla-1-full", row(true, true, true)},
        {"vla-2-no-box-pe", row(true, true, false)},
        {"vla-3-no-text-init", row(true, false, true)},
        {"vla-4-no-verb-prediction", row(false, true, true)},
        {"vla-5-no-verb-prediction-no-text-init", row(false, false, true)},
    };
  }
  throw std::invalid_argument("unknown variant table '" + table + "' (table3, table4, table6, vla)");
}

std::vector<Variant> parse_variants(const std::string& text) {
  std::vector<Variant> out;
  std::set<std::string> names;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto add = [&](const Variant& v) {
    if (!names.insert(v.name).second) throw std::invalid_argument("duplicate variant name '" + v.name + "'");
    out.push_back(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '@') {
      for (const auto& v : builtin_variants(line.substr(1))) add(v);
      continue;
    }
    std::istringstream words(line);
    Variant v;
    words >> v.name;
    std::string item;
    while (words >> item) {
      if (item.find('=') == std::string::npos) {
        throw std::invalid_argument("variants line " + std::to_string(lineno) + ": '" + item + "' is not key=value");
      }
      v.overrides.push_back(item);
    }
    add(v);
  }
  if (out.empty()) throw std::invalid_argument("no variants given");
  return out;
}

std::vector<Variant> load_variants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open variants file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_variants(buffer.str());
}

RunConfig apply_variant(const RunConfig& base, const Variant& variant) {
  RunConfig cfg = base;
  try {
    apply_overrides(cfg, variant.overrides);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("variant '" + variant.name + "': " + e.what());
  }
  cfg.name = variant.name;
  return cfg;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<Variant>& variants,
                                      const DatasetSplit& train, const DatasetSplit& test,
                                      const std::filesystem::path& out_dir, bool verbose) {
  // Validate everything before spending time on training.
  std::vector<RunConfig> configs;
  for (const auto& v : variants) configs.push_back(apply_variant(base, v));
  std::vector<AblationRow> rows;
  for (const auto& cfg : configs) {
    TrainOptions opts;
    opts.verbose = verbose;
    if (!out_dir.empty()) opts.out_dir = out_dir / cfg.name;
    const auto result = sovstg::train(cfg, train, test, opts);
    AblationRow row;
    row.variant = cfg.name;
    row.epochs = static_cast<int64_t>(result.history.size());
    for (auto it = result.history.rbegin(); it != result.history.rend(); ++it) {
      if (!it->evaluated) continue;
      row.full = it->map.full;
      row.rare = it->map.rare;
      row.non_rare = it->map.non_rare;
      break;
    }
    row.best_full = result.best_full;
    row.epochs_to_best = result.best_epoch;
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant,full,rare,non_rare,best_full,epochs_to_best,epochs\n";
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    std::ostringstream s;
    s.precision(6);
    s << std::fixed << v;
    return s.str();
  };
  for (const auto& r : rows) {
    os << r.variant << "," << num(r.full) << "," << num(r.rare) << "," << num(r.non_rare) << "," << num(r.best_full)
       << "," << r.epochs_to_best << "," << r.epochs << "\n";
  }
  return os.str();
}

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace sovstg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("key '" + key + "': expected a number, got '" + value + "'");
  }
}

int64_t to_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("key '" + key + "': expected an integer, got '" + value + "'");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

// One documented key: how to write it and how to read it back.
struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field number_field(const std::string& key, Member member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            auto& ref = member(c);
            using T = std::decay_t<decltype(ref)>;
            if constexpr (std::is_floating_point_v<T>) {
              ref = to_double(key, v);
            } else {
              ref = static_cast<T>(to_int(key, v));
            }
          },
          [member](const RunConfig& c) {
            auto& ref = member(const_cast<RunConfig&>(c));
            using T = std::decay_t<decltype(ref)>;
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(ref);
            } else {
              return std::to_string(ref);
            }
          }};
}

template <typename Member>
Field bool_field(const std::string& key, Member member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            try {
              member(c) = parse_bool(v);
            } catch (const std::invalid_argument&) {
              throw std::invalid_argument("key '" + key + "': expected true/false, got '" + v + "'");
            }
          },
          [member](const RunConfig& c) { return format_bool(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field string_field(const std::string& key, Member member) {
  return {key, [member](RunConfig& c, const std::string& v) { member(c) = v; },
          [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }};
}

#define SOVSTG_REF(expr) [](RunConfig& c) -> auto& { return expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(string_field("run.name", SOVSTG_REF(c.name)));
    f.push_back({"model.preset", [](RunConfig& c, const std::string& v) { apply_preset(c, v); },
                 [](const RunConfig& c) { return c.preset; }});
    f.push_back(number_field("model.dim", SOVSTG_REF(c.model.dim)));
    f.push_back(number_field("model.queries", SOVSTG_REF(c.model.queries)));
    f.push_back(number_field("model.layers", SOVSTG_REF(c.model.layers)));
    f.push_back(number_field("model.heads", SOVSTG_REF(c.model.heads)));
    f.push_back(number_field("model.levels", SOVSTG_REF(c.model.levels)));
    f.push_back(number_field("model.points", SOVSTG_REF(c.model.points)));
    f.push_back(number_field("model.ffn_hidden", SOVSTG_REF(c.model.ffn_hidden)));
    f.push_back(number_field("model.backbone_channels", SOVSTG_REF(c.model.backbone_channels)));
    f.push_back(number_field("model.encoder_layers", SOVSTG_REF(c.model.encoder_layers)));
    f.push_back(number_field("model.advisor_dim", SOVSTG_REF(c.model.advisor_dim)));

    f.push_back(bool_field("switch.sdec", SOVSTG_REF(c.model.subject_decoder)));
    f.push_back(bool_field("switch.vdec", SOVSTG_REF(c.model.verb_decoder)));
    f.push_back(bool_field("switch.so_attention", SOVSTG_REF(c.model.so_attention)));
    f.push_back(bool_field("switch.stg", SOVSTG_REF(c.stg)));
    f.push_back(bool_field("switch.vla", SOVSTG_REF(c.model.vla)));
    f.push_back({"switch.verb_box",
                 [](RunConfig& c, const std::string& v) { c.model.verb_box = box_ops::parse_verb_box_kind(v); },
                 [](const RunConfig& c) { return box_ops::to_string(c.model.verb_box); }});
    f.push_back(bool_field("switch.box_pe", SOVSTG_REF(c.model.box_positional_encoding)));
    f.push_back(bool_field("switch.text_init", SOVSTG_REF(c.text_init)));
    f.push_back(bool_field("switch.vla_verb_prediction", SOVSTG_REF(c.model.vla_verb_prediction)));

    f.push_back(number_field("dn.eta_o", SOVSTG_REF(c.dn.object_flip_rate)));
    f.push_back(number_field("dn.eta_v", SOVSTG_REF(c.dn.verb_noise_rate)));
    f.push_back(number_field("dn.lambda_v", SOVSTG_REF(c.dn.verb_flip_rate)));
    f.push_back(number_field("dn.delta_b", SOVSTG_REF(c.dn.box_noise)));
    f.push_back(number_field("dn.groups", SOVSTG_REF(c.dn.groups)));

    f.push_back(number_field("loss.object", SOVSTG_REF(c.loss.object)));
    f.push_back(number_field("loss.verb", SOVSTG_REF(c.loss.verb)));
    f.push_back(number_field("loss.hoi", SOVSTG_REF(c.loss.hoi)));
    f.push_back(number_field("loss.l1", SOVSTG_REF(c.loss.l1)));
    f.push_back(number_field("loss.giou", SOVSTG_REF(c.loss.giou)));
    f.push_back(number_field("loss.focal_alpha", SOVSTG_REF(c.loss.focal_alpha)));
    f.push_back(number_field("loss.focal_gamma", SOVSTG_REF(c.loss.focal_gamma)));

    f.push_back(number_field("eval.iou_threshold", SOVSTG_REF(c.eval.iou_threshold)));
    f.push_back(number_field("eval.rare_threshold", SOVSTG_REF(c.eval.rare_threshold)));
    f.push_back({"eval.setting", [](RunConfig& c, const std::string& v) { c.eval.setting = parse_eval_setting(v); },
                 [](const RunConfig& c) { return to_string(c.eval.setting); }});
    f.push_back({"eval.interpolation",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "all-point") {
                     c.eval.interpolation = ApInterpolation::kAllPoint;
                   } else if (v == "11-point") {
                     c.eval.interpolation = ApInterpolation::kElevenPoint;
                   } else {
                     throw std::invalid_argument("eval.interpolation must be all-point or 11-point");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.eval.interpolation == ApInterpolation::kAllPoint ? "all-point" : "11-point");
                 }});
    f.push_back({"eval.score", [](RunConfig& c, const std::string& v) { c.score = parse_score_mode(v); },
                 [](const RunConfig& c) { return to_string(c.score); }});
    f.push_back(number_field("eval.top_k", SOVSTG_REF(c.top_k)));
    f.push_back(number_field("eval.every", SOVSTG_REF(c.eval_every)));

    f.push_back(number_field("optim.lr", SOVSTG_REF(c.optim.lr)));
    f.push_back(number_field("optim.weight_decay", SOVSTG_REF(c.optim.weight_decay)));
    f.push_back(number_field("optim.batch_size", SOVSTG_REF(c.optim.batch_size)));
    f.push_back(number_field("optim.epochs", SOVSTG_REF(c.optim.epochs)));
    f.push_back(number_field("optim.lr_drop_fraction", SOVSTG_REF(c.optim.lr_drop_fraction)));
    f.push_back(number_field("optim.lr_drop_factor", SOVSTG_REF(c.optim.lr_drop_factor)));
    f.push_back(number_field("optim.grad_clip", SOVSTG_REF(c.optim.grad_clip)));

    f.push_back(number_field("run.seed", SOVSTG_REF(c.seed)));
    f.push_back(string_field("run.provider", SOVSTG_REF(c.provider)));
    f.push_back(string_field("run.init_from", SOVSTG_REF(c.init_from)));
    f.push_back(number_field("run.max_train_images", SOVSTG_REF(c.max_train_images)));
    f.push_back(number_field("run.stop_at_map", SOVSTG_REF(c.stop_at_map)));
    return f;
  }();
  return table;
}

#undef SOVSTG_REF

}  // namespace

bool parse_bool(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "off" || t == "no" || t == "0") return false;
  throw std::invalid_argument("not a boolean: '" + text + "'");
}

KeyValueDocument KeyValueDocument::parse(const std::string& text, const std::string& origin) {
  KeyValueDocument doc;
  doc.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
    if (doc.entries_.count(key)) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    doc.entries_[key] = value;
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

const std::string* KeyValueDocument::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string KeyValueDocument::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double KeyValueDocument::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  return v ? to_double(key, *v) : fallback;
}

int64_t KeyValueDocument::get_int(const std::string& key, int64_t fallback) const {
  const auto* v = find(key);
  return v ? to_int(key, *v) : fallback;
}

bool KeyValueDocument::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  try {
    return parse_bool(*v);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument(origin_ + ": key '" + key + "' expects true/false");
  }
}

void KeyValueDocument::reject_unused() const {
  std::string unknown;
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw std::invalid_argument(origin_ + ": unknown keys: " + unknown);
}

void RunConfig::validate() const {
  model.validate();
  dn.validate();
  eval.validate();
  if (optim.lr <= 0.0 || optim.batch_size < 1 || optim.epochs < 1) {
    throw std::invalid_argument("optim.lr, optim.batch_size and optim.epochs must be positive");
  }
  if (optim.lr_drop_fraction < 0.0 || optim.lr_drop_fraction > 1.0) {
    throw std::invalid_argument("optim.lr_drop_fraction must be in [0,1]");
  }
  for (double w : {loss.object, loss.verb, loss.hoi, loss.l1, loss.giou}) {
    if (w < 0.0) throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (eval_every < 1 || top_k < 1) throw std::invalid_argument("eval.every and eval.top_k must be positive");
  if (score == ScoreMode::kHoi && !model.vla) throw std::invalid_argument("eval.score=hoi needs switch.vla=true");
}

void apply_preset(RunConfig& cfg, const std::string& preset) {
  auto& m = cfg.model;
  if (preset == "toy-S") {
    m.dim = 64;
    m.queries = 16;
    m.layers = 2;
    m.heads = 4;
    m.levels = 2;
    m.points = 4;
    m.ffn_hidden = 128;
    m.backbone_channels = 16;
    m.encoder_layers = 1;
    m.advisor_dim = 32;
    cfg.dn.groups = 3;
  } else if (preset == "toy-XS") {
    m.dim = 32;
    m.queries = 8;
    m.layers = 2;
    m.heads = 2;
    m.levels = 2;
    m.points = 2;
    m.ffn_hidden = 64;
    m.backbone_channels = 8;
    m.encoder_layers = 1;
    m.advisor_dim = 16;
    cfg.dn.groups = 2;
  } else {
    throw std::invalid_argument("unknown model preset '" + preset + "' (toy-S, toy-XS)");
  }
  cfg.preset = preset;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

RunConfig run_config_from(const KeyValueDocument& doc) {
  RunConfig cfg;
  // The preset goes first so explicit sizes override it.
  if (doc.has("model.preset")) apply_preset(cfg, doc.get_string("model.preset", "toy-S"));
  for (const auto& [key, value] : doc.entries()) {
    if (key == "model.preset") continue;
    try {
      set_config_value(cfg, key, doc.get_string(key, value));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(doc.origin() + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from(KeyValueDocument::load(path)); }

RunConfig parse_run_config(const std::string& text) { return run_config_from(KeyValueDocument::parse(text)); }

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_entries(cfg)) {
    // Sizes are written explicitly, so the preset line only documents intent.
    out += key + " = " + value + "\n";
  }
  return out;
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + item + "' is not key=value");
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    if (key == "model.preset") {
      apply_preset(cfg, value);
    } else {
      set_config_value(cfg, key, value);
    }
  }
}

std::string to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kHoi:
      return "hoi";
    case ScoreMode::kVerb:
      return "verb";
    default:
      return "auto";
  }
}

ScoreMode parse_score_mode(const std::string& text) {
  if (text == "auto") return ScoreMode::kAuto;
  if (text == "hoi") return ScoreMode::kHoi;
  if (text == "verb") return ScoreMode::kVerb;
  throw std::invalid_argument("eval.score must be auto, hoi or verb");
}

ScoreMode effective_score_mode(const RunConfig& cfg) {
  if (cfg.score != ScoreMode::kAuto) return cfg.score;
  return cfg.model.vla ? ScoreMode::kHoi : ScoreMode::kVerb;
}

}  // namespace sovstg

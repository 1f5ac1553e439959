// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

// Command-line front end: data generation, training, evaluation, ablations
// and convergence plots.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "sovstg/ablation.hpp"
#include "sovstg/checkpoint.hpp"
#include "sovstg/curves.hpp"
#include "sovstg/evaluation.hpp"
#include "sovstg/synthetic.hpp"
#include "sovstg/trainer.hpp"

namespace fs = std::filesystem;
using namespace sovstg;

namespace {

int gen_data(const fs::path& spec_path, const fs::path& out) {
  const auto spec = load_scene_spec(spec_path);
  const auto d = generate_dataset(spec, out);
  std::cout << "wrote " << d.train.size() << " train / " << d.test.size() << " test scenes, " << d.vocab.num_hoi()
            << " HOI classes to " << out << "\n";
  return 0;
}

int train_cmd(const fs::path& config, const fs::path& data, const fs::path& out, const std::string& init_from,
              const std::vector<std::string>& overrides) {
  auto cfg = load_run_config(config);
  apply_overrides(cfg, overrides);
  if (!init_from.empty()) cfg.init_from = init_from;
  cfg.validate();
  const auto tr = load_split(data, "train");
  const auto te = load_split(data, "test");
  TrainOptions opts;
  opts.out_dir = out;
  const auto result = train(cfg, tr, te, opts);
  std::cout << "best Full mAP " << result.best_full << " at epoch " << result.best_epoch << " (" << result.seconds
            << " s); metrics in " << result.metrics_csv << "\n";
  return 0;
}

int eval_cmd(const fs::path& checkpoint, const fs::path& data, const std::string& setting_name,
             const std::string& predictions_out) {
  const auto setting = parse_eval_setting(setting_name);
  auto loaded = load_model(checkpoint);
  const auto tr = load_split(data, "train");
  const auto te = load_split(data, "test");
  if (annotations_to_json(te.vocab, {}) != annotations_to_json(loaded.vocab, {})) {
    throw std::runtime_error("checkpoint vocabulary does not match the dataset");
  }
  torch::Tensor tokens;
  if (loaded.config.model.vla) {
    auto provider = make_provider(loaded.config.provider, 7, loaded.config.model.dim, loaded.config.model.advisor_dim);
    tokens = advisor_tokens_for(*provider, te.pixels);
  }
  const auto preds = predict(loaded.model, te, tokens);
  if (!predictions_out.empty()) write_predictions(predictions_out, preds);
  const bool use_hoi = effective_score_mode(loaded.config) == ScoreMode::kHoi;
  const auto dets = detections_from_predictions(preds, te.vocab, use_hoi, loaded.config.top_k);
  EvalConfig ec = loaded.config.eval;
  ec.setting = setting;
  const auto result = evaluate_map(dets, te.images, te.vocab, hoi_class_counts(tr.images, tr.vocab), ec);
  std::cout << map_csv(result, setting);
  return 0;
}

int ablate_cmd(const fs::path& config, const fs::path& variants_path, const fs::path& data, const fs::path& out,
               const std::vector<std::string>& overrides) {
  auto base = load_run_config(config);
  apply_overrides(base, overrides);
  const auto variants = load_variants(variants_path);
  const auto tr = load_split(data, "train");
  const auto te = load_split(data, "test");
  const auto rows = run_ablation(base, variants, tr, te, out, true);
  const auto csv = ablation_csv(rows);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(out / "ablation.csv") << csv;
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOV-STG human-object interaction detection at desk scale"};
  app.require_subcommand(1);

  fs::path spec, out, config, data, checkpoint, variants, plot_out;
  std::string setting = "default", init_from, predictions_out;
  std::vector<std::string> overrides, runs;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  gen->add_option("--spec", spec, "scene spec file")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train one configuration");
  tr->add_option("--config", config, "run config file")->required();
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "run output directory")->required();
  tr->add_option("--init-from", init_from, "initialise matching parameters from a checkpoint");
  tr->add_option("--set", overrides, "key=value config override (repeatable)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--setting", setting, "default | known-object")->check(CLI::IsMember({"default", "known-object"}));
  ev->add_option("--predictions", predictions_out, "write per-query predictions (JSON lines)");

  auto* ab = app.add_subcommand("ablate", "train every variant of a variants file");
  ab->add_option("--config", config, "base run config")->required();
  ab->add_option("--variants", variants, "variants file")->required();
  ab->add_option("--data", data, "dataset directory")->default_val("data");
  ab->add_option("--out", out, "output directory")->default_val("ablation");
  ab->add_option("--set", overrides, "key=value override applied to the base config");

  auto* pl = app.add_subcommand("plot", "overlay mAP curves of several runs");
  pl->add_option("--runs", runs, "metrics CSV files")->required()->expected(1, -1);
  pl->add_option("--out", plot_out, "output SVG (tidy CSV written alongside)")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return gen_data(spec, out);
    if (*tr) return train_cmd(config, data, out, init_from, overrides);
    if (*ev) return eval_cmd(checkpoint, data, setting, predictions_out);
    if (*ab) return ablate_cmd(config, variants, data, out, overrides);
    if (*pl) {
      std::vector<fs::path> paths(runs.begin(), runs.end());
      emit_curves(paths, plot_out);
      auto csv = plot_out;
      csv.replace_extension(".csv");
      std::cout << "wrote " << plot_out << " and " << csv << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

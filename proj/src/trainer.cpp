// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sovstg/checkpoint.hpp"
#include "sovstg/denoising.hpp"

namespace sovstg {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(8);
  os << std::fixed << v;
  return os.str();
}

// Portable index in [0, n).
uint64_t draw_below(std::mt19937_64& rng, uint64_t n) {
  return static_cast<uint64_t>(static_cast<double>(rng() >> 11) * 0x1.0p-53 * static_cast<double>(n));
}

torch::Tensor rows_of(const torch::Tensor& t, const std::vector<int64_t>& indices) {
  return t.index_select(0, torch::tensor(indices, torch::kInt64));
}

}  // namespace

std::string metrics_csv_row(const EpochRecord& r) {
  auto loss = [&](const char* name) {
    auto it = r.losses.find(name);
    return it == r.losses.end() ? 0.0 : it->second;
  };
  const double nan = std::nan("");
  std::ostringstream os;
  os << r.epoch << "," << fmt(r.lr) << "," << fmt(loss("total")) << "," << fmt(loss("object")) << ","
     << fmt(loss("verb")) << "," << fmt(loss("hoi")) << "," << fmt(loss("l1")) << "," << fmt(loss("giou")) << ","
     << fmt(loss("dn")) << "," << fmt(r.evaluated ? r.map.full : nan) << "," << fmt(r.evaluated ? r.map.rare : nan)
     << "," << fmt(r.evaluated ? r.map.non_rare : nan);
  return os.str();
}

torch::Tensor advisor_tokens_for(const AdvisorProvider& provider, const torch::Tensor& pixels) {
  std::vector<torch::Tensor> tokens;
  tokens.reserve(pixels.size(0));
  for (int64_t i = 0; i < pixels.size(0); ++i) tokens.push_back(provider.extract_image_features(pixels[i]).tokens);
  if (tokens.empty()) return torch::zeros({0, provider.num_tokens(), provider.feature_dim()});
  return torch::stack(tokens);
}

std::vector<QueryPrediction> predict(SovStgModel& model, const DatasetSplit& split, const torch::Tensor& advisor_tokens,
                                     int64_t batch_size) {
  torch::NoGradGuard no_grad;
  const bool was_training = model->is_training();
  model->eval();
  std::vector<QueryPrediction> out;
  const int64_t n = static_cast<int64_t>(split.images.size());
  for (int64_t begin = 0; begin < n; begin += batch_size) {
    const int64_t len = std::min(batch_size, n - begin);
    auto images = split.pixels.narrow(0, begin, len);
    auto tokens = advisor_tokens.defined() && advisor_tokens.numel() > 0 ? advisor_tokens.narrow(0, begin, len)
                                                                         : torch::Tensor();
    auto res = model->forward(images, tokens, nullptr);
    auto subj = res.subject_boxes.back().to(torch::kFloat64).contiguous();
    auto obj = res.object_boxes.back().to(torch::kFloat64).contiguous();
    auto obj_prob = torch::sigmoid(res.object_logits.back()).to(torch::kFloat64);
    auto [obj_score, obj_class] = obj_prob.max(-1);
    auto verb = torch::sigmoid(res.verb_logits.back()).to(torch::kFloat64).contiguous();
    torch::Tensor hoi;
    if (res.hoi_logits.defined()) hoi = torch::sigmoid(res.hoi_logits).to(torch::kFloat64).contiguous();
    auto sa = subj.accessor<double, 3>();
    auto oa = obj.accessor<double, 3>();
    auto osa = obj_score.contiguous();
    auto oca = obj_class.contiguous();
    for (int64_t b = 0; b < len; ++b) {
      for (int64_t q = 0; q < res.num_queries; ++q) {
        QueryPrediction p;
        p.image_id = split.images[begin + b].id;
        p.subject = {sa[b][q][0], sa[b][q][1], sa[b][q][2], sa[b][q][3]};
        p.object = {oa[b][q][0], oa[b][q][1], oa[b][q][2], oa[b][q][3]};
        p.object_class = oca[b][q].item<int64_t>();
        p.object_score = osa[b][q].item<double>();
        auto vr = verb[b][q];
        p.verb_scores.assign(vr.data_ptr<double>(), vr.data_ptr<double>() + vr.numel());
        if (hoi.defined()) {
          auto hr = hoi[b][q];
          p.hoi_scores.assign(hr.data_ptr<double>(), hr.data_ptr<double>() + hr.numel());
        }
        out.push_back(std::move(p));
      }
    }
  }
  if (was_training) model->train();
  return out;
}

MapResult evaluate_split(SovStgModel& model, const DatasetSplit& split, const torch::Tensor& advisor_tokens,
                         const RunConfig& cfg, const std::vector<int64_t>& train_counts, EvalSetting setting) {
  const auto preds = predict(model, split, advisor_tokens);
  const bool use_hoi = effective_score_mode(cfg) == ScoreMode::kHoi;
  const auto dets = detections_from_predictions(preds, split.vocab, use_hoi, cfg.top_k);
  EvalConfig ec = cfg.eval;
  ec.setting = setting;
  return evaluate_map(dets, split.images, split.vocab, train_counts, ec);
}

int64_t init_from_checkpoint(const fs::path& path, SovStgModel& model) {
  auto source = load_model(path);
  auto src = source.model->named_parameters(true);
  int64_t copied = 0;
  torch::NoGradGuard no_grad;
  for (auto& item : model->named_parameters(true)) {
    const auto* other = src.find(item.key());
    if (other == nullptr || !other->sizes().equals(item.value().sizes())) continue;
    item.value().copy_(*other);
    ++copied;
  }
  if (copied == 0) throw std::runtime_error("no parameter of " + path.string() + " matches the model");
  return copied;
}

Trainer::Trainer(const RunConfig& cfg, const DatasetSplit& train, const DatasetSplit& test)
    : cfg_(cfg), train_(train), test_(test), rng_(cfg.seed) {
  cfg_.validate();
  const int64_t n = static_cast<int64_t>(train_.images.size());
  const int64_t used = cfg_.max_train_images > 0 ? std::min(cfg_.max_train_images, n) : n;
  for (int64_t i = 0; i < used; ++i) train_indices_.push_back(i);
  for (const auto& img : train_.images) {
    if (static_cast<int64_t>(img.hois.size()) > cfg_.model.queries) {
      throw std::invalid_argument("an image has more interactions than model.queries");
    }
    targets_.push_back(make_targets(img, train_.vocab));
  }
  train_counts_ = hoi_class_counts(train_.images, train_.vocab);

  torch::manual_seed(cfg_.seed);
  model_ = SovStgModel(model_config_for(cfg_, train_.vocab));
  if (cfg_.model.vla) {
    provider_ = make_provider(cfg_.provider, 7, cfg_.model.dim, cfg_.model.advisor_dim);
    train_tokens_ = advisor_tokens_for(*provider_, train_.pixels);
    test_tokens_ = advisor_tokens_for(*provider_, test_.pixels);
    if (cfg_.text_init) model_->init_hoi_head(hoi_text_weights(*provider_, train_.vocab));
  }
  if (!cfg_.init_from.empty()) init_from_checkpoint(cfg_.init_from, model_);
  optimizer_ = std::make_unique<torch::optim::AdamW>(
      model_->parameters(), torch::optim::AdamWOptions(cfg_.optim.lr).weight_decay(cfg_.optim.weight_decay));
}

double Trainer::learning_rate(int64_t epoch) const {
  const auto drop = static_cast<int64_t>(std::llround(cfg_.optim.epochs * cfg_.optim.lr_drop_fraction));
  return epoch > drop ? cfg_.optim.lr * cfg_.optim.lr_drop_factor : cfg_.optim.lr;
}

std::vector<int64_t> Trainer::epoch_order() {
  auto order = train_indices_;
  for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_below(rng_, i)]);
  return order;
}

void Trainer::dump_non_finite(const std::vector<int64_t>& indices, const LossBreakdown& inf,
                              const LossBreakdown& dn) const {
  nlohmann::json j;
  j["epoch"] = current_epoch_;
  std::vector<int64_t> ids;
  for (auto i : indices) ids.push_back(train_.images[i].id);
  j["image_ids"] = ids;
  for (const auto& [name, value] : inf.terms) j["loss"][name] = value.item<double>();
  for (const auto& [name, value] : dn.terms) j["dn_loss"][name] = value.item<double>();
  j["annotations"] = nlohmann::json::array();
  for (auto i : indices) {
    std::vector<ImageAnnotation> one{train_.images[i]};
    j["annotations"].push_back(nlohmann::json::parse(annotations_to_json(train_.vocab, one))["images"][0]);
  }
  const auto path = (dump_dir_.empty() ? fs::current_path() : dump_dir_) / "nonfinite_batch.json";
  std::ofstream(path) << j.dump(1) << "\n";
  throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(current_epoch_) + "; batch dumped to " +
                           path.string());
}

LossBreakdown Trainer::step(const std::vector<int64_t>& indices) {
  model_->train();
  auto images = rows_of(train_.pixels, indices);
  torch::Tensor tokens;
  if (cfg_.model.vla) tokens = rows_of(train_tokens_, indices);
  std::vector<ImageTargets> targets;
  for (auto i : indices) targets.push_back(targets_[i]);

  std::optional<PaddedDN> dn;
  if (cfg_.stg) {
    std::vector<DNGroupBatch> groups;
    for (auto i : indices) {
      groups.push_back(build_dn_queries(train_.images[i].hois, model_->bank, cfg_.dn, cfg_.model.queries, rng_));
    }
    dn = pad_dn_batches(groups, cfg_.model.queries, cfg_.model.dim, model_->bank->object_priors.options());
  }
  last_dn_rows_ = dn ? dn->valid.sum().item<int64_t>() : 0;
  total_dn_rows_ += last_dn_rows_;

  auto out = model_->forward(images, tokens, dn ? &*dn : nullptr);
  const int64_t nq = cfg_.model.queries;
  auto inference = slice_queries(out, 0, nq);
  auto matches = match_batch(inference, targets, cfg_.loss);
  auto inf = compute_losses(inference, targets, matches, cfg_.loss);
  LossBreakdown dnl;
  torch::Tensor total = inf.total;
  if (dn && dn->length() > 0) {
    dnl = dn_losses(slice_queries(out, nq, dn->length()), targets, dn->gt_index, dn->valid, cfg_.loss);
    total = total + dnl.total;
  }
  if (!std::isfinite(total.item<double>())) dump_non_finite(indices, inf, dnl);

  optimizer_->zero_grad();
  total.backward();
  if (cfg_.optim.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model_->parameters(), cfg_.optim.grad_clip);
  optimizer_->step();

  LossBreakdown result = inf;
  result.total = total.detach();
  result.terms["dn"] = dnl.total.defined() ? dnl.total.detach() : torch::zeros({});
  return result;
}

MapResult Trainer::evaluate(EvalSetting setting) {
  return evaluate_split(model_, test_, test_tokens_, cfg_, train_counts_, setting);
}

EpochRecord Trainer::run_epoch(int64_t epoch) {
  current_epoch_ = epoch;
  EpochRecord rec;
  rec.epoch = epoch;
  rec.lr = learning_rate(epoch);
  for (auto& group : optimizer_->param_groups()) {
    static_cast<torch::optim::AdamWOptions&>(group.options()).lr(rec.lr);
  }
  const auto order = epoch_order();
  const int64_t bs = cfg_.optim.batch_size;
  int64_t batches = 0;
  for (size_t begin = 0; begin < order.size(); begin += bs) {
    std::vector<int64_t> batch(order.begin() + begin, order.begin() + std::min(order.size(), begin + bs));
    auto l = step(batch);
    rec.losses["total"] += l.total.item<double>();
    for (const auto& [name, value] : l.terms) rec.losses[name] += value.item<double>();
    ++batches;
  }
  for (auto& [name, value] : rec.losses) value /= std::max<int64_t>(1, batches);
  if (epoch % cfg_.eval_every == 0 || epoch == cfg_.optim.epochs) {
    rec.map = evaluate(cfg_.eval.setting);
    rec.evaluated = true;
  }
  return rec;
}

TrainResult Trainer::fit(const TrainOptions& options) {
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  dump_dir_ = options.out_dir;
  std::ofstream csv;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    result.metrics_csv = options.out_dir / "metrics.csv";
    csv.open(result.metrics_csv);
    csv << kMetricsFormat << "\n" << kMetricsColumns << "\n";
    std::ofstream(options.out_dir / "config.cfg") << to_text(cfg_);
  }
  CheckpointMeta meta;
  meta.config_text = to_text(cfg_);
  meta.vocab_json = annotations_to_json(train_.vocab, {});
  for (int64_t epoch = 1; epoch <= cfg_.optim.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto rec = run_epoch(epoch);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (csv.is_open()) csv << metrics_csv_row(rec) << "\n" << std::flush;
    if (options.verbose) {
      std::cerr << "[" << cfg_.name << "] epoch " << epoch << "/" << cfg_.optim.epochs << " loss "
                << fmt(rec.losses["total"]) << " dn " << fmt(rec.losses["dn"]);
      if (rec.evaluated) std::cerr << " full " << fmt(rec.map.full) << " rare " << fmt(rec.map.rare);
      std::cerr << " (" << fmt(secs) << "s)\n";
    }
    if (options.on_epoch) options.on_epoch(rec);
    const bool improved = rec.evaluated && rec.map.full > result.best_full;
    if (improved) {
      result.best_full = rec.map.full;
      result.best_epoch = epoch;
    }
    const bool stop = rec.evaluated && cfg_.stop_at_map > 0.0 && rec.map.full >= cfg_.stop_at_map;
    if (!options.out_dir.empty() && options.save_checkpoints) {
      meta.epoch = epoch;
      meta.rng_state = rng_to_string(rng_);
      result.checkpoint = options.out_dir / "last.pt";
      save_checkpoint(result.checkpoint, model_, optimizer_.get(), meta);
      if (improved) save_checkpoint(options.out_dir / "best.pt", model_, nullptr, meta);
    }
    if (stop) break;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult train(const RunConfig& cfg, const DatasetSplit& train, const DatasetSplit& test,
                  const TrainOptions& options) {
  Trainer trainer(cfg, train, test);
  return trainer.fit(options);
}

}  // namespace sovstg

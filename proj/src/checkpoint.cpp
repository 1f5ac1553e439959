// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

#include "sovstg/synthetic.hpp"

namespace sovstg {

namespace {

std::string read_string(torch::serialize::InputArchive& ar, const std::string& key) {
  c10::IValue v;
  ar.read(key, v);
  return v.toStringRef();
}

int64_t read_int(torch::serialize::InputArchive& ar, const std::string& key) {
  c10::IValue v;
  ar.read(key, v);
  return v.toInt();
}

}  // namespace

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw std::runtime_error("corrupt rng state in checkpoint");
}

ModelConfig model_config_for(const RunConfig& cfg, const Vocabulary& vocab) {
  ModelConfig m = cfg.model;
  m.num_objects = vocab.num_objects();
  m.num_verbs = vocab.num_verbs();
  m.num_hoi = std::max<int64_t>(1, vocab.num_hoi());
  return m;
}

void save_checkpoint(const std::filesystem::path& path, SovStgModel& model, torch::optim::Optimizer* optimizer,
                     const CheckpointMeta& meta) {
  torch::serialize::OutputArchive ar;
  ar.write("meta.format_version", c10::IValue(meta.format_version));
  ar.write("meta.epoch", c10::IValue(meta.epoch));
  ar.write("meta.config", c10::IValue(meta.config_text));
  ar.write("meta.vocab", c10::IValue(meta.vocab_json));
  ar.write("meta.rng", c10::IValue(meta.rng_state));
  torch::serialize::OutputArchive params;
  model->save(params);
  ar.write("model", params);
  ar.write("meta.has_optimizer", c10::IValue(optimizer != nullptr));
  if (optimizer != nullptr) {
    torch::serialize::OutputArchive opt;
    optimizer->save(opt);
    ar.write("optimizer", opt);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  ar.save_to(path.string());
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  torch::serialize::InputArchive ar;
  ar.load_from(path.string());
  CheckpointMeta meta;
  meta.format_version = read_int(ar, "meta.format_version");
  if (meta.format_version != kCheckpointFormat) {
    throw std::runtime_error("checkpoint format " + std::to_string(meta.format_version) + " is not supported (expected " +
                             std::to_string(kCheckpointFormat) + ")");
  }
  meta.epoch = read_int(ar, "meta.epoch");
  meta.config_text = read_string(ar, "meta.config");
  meta.vocab_json = read_string(ar, "meta.vocab");
  meta.rng_state = read_string(ar, "meta.rng");
  return meta;
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, SovStgModel& model,
                               torch::optim::Optimizer* optimizer) {
  auto meta = read_checkpoint_meta(path);
  torch::serialize::InputArchive ar;
  ar.load_from(path.string());
  torch::serialize::InputArchive params;
  ar.read("model", params);
  model->load(params);
  if (optimizer != nullptr) {
    c10::IValue has;
    ar.read("meta.has_optimizer", has);
    if (has.toBool()) {
      torch::serialize::InputArchive opt;
      ar.read("optimizer", opt);
      optimizer->load(opt);
    }
  }
  return meta;
}

LoadedModel load_model(const std::filesystem::path& path) {
  LoadedModel out;
  out.meta = read_checkpoint_meta(path);
  out.config = parse_run_config(out.meta.config_text);
  std::vector<ImageAnnotation> none;
  parse_annotations_json(out.meta.vocab_json, out.vocab, none);
  out.model = SovStgModel(model_config_for(out.config, out.vocab));
  load_checkpoint(path, out.model, nullptr);
  out.model->eval();
  return out;
}

}  // namespace sovstg

// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/model.hpp"

#include <cmath>
#include <stdexcept>

namespace sovstg {

namespace nn = torch::nn;

void ModelConfig::validate() const {
  if (!subject_decoder && so_attention) {
    throw std::invalid_argument("S-O attention needs the subject decoder (subject_decoder=false, so_attention=true)");
  }
  if (dim % 4 != 0 || dim % heads != 0) throw std::invalid_argument("model.dim must be divisible by 4 and by heads");
  if (queries < 1 || layers < 1) throw std::invalid_argument("model.queries and model.layers must be positive");
  if (num_objects < 1 || num_verbs < 1) throw std::invalid_argument("class counts must be positive");
  if (vla && num_hoi < 1) throw std::invalid_argument("the advisor needs at least one HOI class");
}

DecoderOptions ModelConfig::decoder_options() const {
  DecoderOptions o;
  o.dim = dim;
  o.heads = heads;
  o.layers = layers;
  o.levels = levels;
  o.points = points;
  o.ffn_hidden = ffn_hidden;
  return o;
}

ModelOutput slice_queries(const ModelOutput& out, int64_t begin, int64_t length) {
  auto cut = [&](const torch::Tensor& t) { return t.defined() ? t.narrow(1, begin, length) : t; };
  auto cut_all = [&](const std::vector<torch::Tensor>& v) {
    std::vector<torch::Tensor> r;
    r.reserve(v.size());
    for (const auto& t : v) r.push_back(cut(t));
    return r;
  };
  ModelOutput s;
  s.num_queries = begin == 0 ? std::min(length, out.num_queries) : 0;
  s.dn_length = length - s.num_queries;
  s.subject_boxes = cut_all(out.subject_boxes);
  s.object_boxes = cut_all(out.object_boxes);
  s.object_logits = cut_all(out.object_logits);
  s.verb_logits = cut_all(out.verb_logits);
  s.hoi_logits = cut(out.hoi_logits);
  s.verb_boxes = cut(out.verb_boxes);
  s.subject_embeddings = cut_all(out.subject_embeddings);
  s.object_embeddings = cut_all(out.object_embeddings);
  s.verb_queries = cut_all(out.verb_queries);
  s.verb_embeddings = cut_all(out.verb_embeddings);
  s.advisor_embeddings = cut_all(out.advisor_embeddings);
  s.bridge_embeddings = cut(out.bridge_embeddings);
  return s;
}

SovStgModelImpl::SovStgModelImpl(const ModelConfig& config) : config_(config) {
  config.validate();
  const auto dec = config.decoder_options();
  bank = register_module("bank", LabelEmbeddingBank(config.num_objects, config.num_verbs, config.dim));
  coeffs = register_module("coeffs", CoefficientMatrices(config.queries, config.num_objects, config.num_verbs));

  ExtractorOptions ex;
  ex.dim = config.dim;
  ex.levels = config.levels;
  ex.channels = config.backbone_channels;
  ex.encoder_layers = config.encoder_layers;
  ex.heads = config.heads;
  extractor = register_module("extractor", ToyFeatureExtractor(ex));

  object_stack = register_module("object_stack", DetectionDecoderStack(dec, config.queries));
  if (config.subject_decoder) {
    subject_stack = register_module("subject_stack", clone_object_to_subject(object_stack));
  } else {
    subject_box_heads = register_module("subject_box_heads", nn::ModuleList());
    for (int64_t l = 0; l < config.layers; ++l) {
      auto head = Mlp(config.dim, config.dim, 4, 3);
      auto last = head->layers[head->layers->size() - 1]->as<nn::Linear>();
      nn::init::zeros_(last->weight);
      nn::init::zeros_(last->bias);
      subject_box_heads->push_back(head);
    }
    subject_anchor_logits = register_parameter("subject_anchor_logits", object_stack->anchor_logits.detach().clone());
  }

  // Focal-loss prior: every class starts at probability 0.01.
  const double prior_bias = -std::log((1.0 - 0.01) / 0.01);
  object_head = register_module("object_head", nn::Linear(config.dim, config.num_objects));
  verb_head = register_module("verb_head", nn::Linear(config.dim, config.num_verbs));
  {
    torch::NoGradGuard no_grad;
    object_head->bias.fill_(prior_bias);
    verb_head->bias.fill_(prior_bias);
  }
  fusion = register_module("fusion", SOFusion(config.dim, config.heads, config.so_attention));
  if (config.verb_decoder) verb_decoder = register_module("verb_decoder", VerbDecoder(dec));
  if (config.vla) {
    AdvisorOptions ao;
    ao.dim = config.dim;
    ao.heads = config.heads;
    ao.layers = config.layers;
    ao.levels = config.levels;
    ao.points = config.points;
    ao.ffn_hidden = config.ffn_hidden;
    ao.advisor_dim = config.advisor_dim;
    ao.box_positional_encoding = config.box_positional_encoding;
    advisor = register_module("advisor", VisionAdvisorDecoder(ao));
    bridge = register_module("bridge", VHOIBridge(config.dim, config.num_hoi, config.vla_verb_prediction));
    torch::NoGradGuard no_grad;
    bridge->hoi_head->bias.fill_(prior_bias);
  }
}

void SovStgModelImpl::init_hoi_head(const torch::Tensor& text_weights) {
  if (!bridge) throw std::logic_error("HOI head initialisation requires the advisor");
  bridge->init_hoi_head(text_weights.to(bridge->hoi_head->weight.scalar_type()));
}

MultiScaleFeatures SovStgModelImpl::extract(const torch::Tensor& images) { return extractor(images); }

ModelOutput SovStgModelImpl::forward(const torch::Tensor& images, const torch::Tensor& advisor_tokens,
                                     const PaddedDN* dn) {
  return forward_features(extractor(images), advisor_tokens, dn);
}

ModelOutput SovStgModelImpl::forward_features(const MultiScaleFeatures& features, const torch::Tensor& advisor_tokens,
                                              const PaddedDN* dn) {
  const int64_t batch = features.batch();
  const int64_t nq = config_.queries;
  const auto opts = bank->object_priors.options();

  auto queries = init_inference_queries(bank, coeffs).unsqueeze(0).expand({batch, nq, config_.dim});
  auto object_anchors = object_stack->initial_anchors().unsqueeze(0).expand({batch, nq, 4});
  auto subject_anchors = (config_.subject_decoder ? subject_stack->initial_anchors() : torch::sigmoid(subject_anchor_logits))
                             .unsqueeze(0)
                             .expand({batch, nq, 4});
  torch::Tensor mask;
  int64_t dn_length = 0;
  if (dn != nullptr && dn->length() > 0) {
    dn_length = dn->length();
    queries = torch::cat({queries, dn->queries.to(opts.dtype())}, 1);
    object_anchors = torch::cat({object_anchors, dn->object_anchors.to(opts.dtype())}, 1);
    subject_anchors = torch::cat({subject_anchors, dn->subject_anchors.to(opts.dtype())}, 1);
    mask = dn->mask;
  }

  ModelOutput out;
  out.num_queries = nq;
  out.dn_length = dn_length;

  auto object = object_stack(queries, object_anchors, features, mask);
  out.object_embeddings = object.embeddings;
  out.object_boxes = object.boxes;
  if (config_.subject_decoder) {
    auto subject = subject_stack(queries, subject_anchors, features, mask);
    out.subject_embeddings = subject.embeddings;
    out.subject_boxes = subject.boxes;
  } else {
    out.subject_embeddings = object.embeddings;
    auto reference = subject_anchors.detach();
    for (int64_t l = 0; l < config_.layers; ++l) {
      auto delta = subject_box_heads[l]->as<Mlp>()->forward(object.embeddings[l]);
      auto refined = torch::sigmoid(box_ops::inverse_sigmoid(reference) + delta);
      out.subject_boxes.push_back(refined);
      reference = refined.detach();
    }
  }

  out.verb_queries = fusion(out.subject_embeddings, out.object_embeddings, bank->verb_priors);
  out.verb_boxes =
      box_ops::verb_box(config_.verb_box, out.subject_boxes.back().detach(), out.object_boxes.back().detach());
  out.verb_embeddings = config_.verb_decoder ? verb_decoder(out.verb_queries, features, out.verb_boxes, mask)
                                             : out.verb_queries;

  for (int64_t l = 0; l < config_.layers; ++l) {
    out.object_logits.push_back(object_head(out.object_embeddings[l]));
    out.verb_logits.push_back(verb_head(out.verb_embeddings[l]));
  }

  if (config_.vla) {
    out.advisor_embeddings =
        advisor(out.verb_queries.back(), advisor_tokens.to(opts.dtype()), features, out.verb_boxes, mask);
    auto bridged = bridge(out.verb_embeddings.back(), out.advisor_embeddings.back(), verb_head);
    out.bridge_embeddings = bridged.fused;
    out.hoi_logits = bridged.hoi_logits;
    if (bridged.verb_logits.defined()) out.verb_logits.back() = bridged.verb_logits;
  }
  return out;
}

}  // namespace sovstg

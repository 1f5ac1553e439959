// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/decoders.hpp"

#include <stdexcept>

#include "sovstg/box_ops.hpp"

namespace sovstg {

namespace nn = torch::nn;

DecoderLayerImpl::DecoderLayerImpl(const DecoderOptions& o) {
  self_attn = register_module("self_attn", MultiHeadAttention(o.dim, o.heads));
  cross_attn = register_module("cross_attn", BoxDeformableAttention(o.dim, o.heads, o.levels, o.points));
  ffn = register_module("ffn", FeedForward(o.dim, o.ffn_hidden));
  norm1 = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({o.dim})));
  norm2 = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({o.dim})));
  norm3 = register_module("norm3", nn::LayerNorm(nn::LayerNormOptions({o.dim})));
}

torch::Tensor DecoderLayerImpl::forward(const torch::Tensor& tgt, const torch::Tensor& pos, const torch::Tensor& boxes,
                                        const MultiScaleFeatures& features, const torch::Tensor& mask) {
  auto qk = tgt + pos;
  auto x = norm1(tgt + self_attn(qk, qk, tgt, mask));
  x = norm2(x + cross_attn(x + pos, boxes, features));
  return norm3(x + ffn(x));
}

DetectionDecoderStackImpl::DetectionDecoderStackImpl(const DecoderOptions& o, int64_t num_queries)
    : options_(o), num_queries_(num_queries) {
  if (o.layers < 1) throw std::invalid_argument("decoder needs at least one layer");
  auto init = torch::cat({torch::rand({num_queries, 2}), torch::full({num_queries, 2}, 0.1)}, 1);
  anchor_logits = register_parameter("anchor_logits", box_ops::inverse_sigmoid(init));
  layers = register_module("layers", nn::ModuleList());
  box_heads = register_module("box_heads", nn::ModuleList());
  for (int64_t l = 0; l < o.layers; ++l) {
    layers->push_back(DecoderLayer(o));
    auto head = Mlp(o.dim, o.dim, 4, 3);
    auto last = head->layers[head->layers->size() - 1]->as<nn::Linear>();
    nn::init::zeros_(last->weight);
    nn::init::zeros_(last->bias);
    box_heads->push_back(head);
  }
  pos_head = register_module("pos_head", Mlp(o.dim, o.dim, o.dim, 2));
}

torch::Tensor DetectionDecoderStackImpl::initial_anchors() const { return torch::sigmoid(anchor_logits); }

StackOutput DetectionDecoderStackImpl::forward(const torch::Tensor& queries, const torch::Tensor& anchors,
                                               const MultiScaleFeatures& features, const torch::Tensor& mask) {
  if (anchors.size(0) != queries.size(0) || anchors.size(1) != queries.size(1)) {
    throw std::invalid_argument("anchor count does not match query count");
  }
  StackOutput out;
  auto tgt = queries;
  auto reference = anchors.detach();
  for (int64_t l = 0; l < options_.layers; ++l) {
    auto pos = pos_head(positional_encode_boxes(reference, options_.dim));
    tgt = layers[l]->as<DecoderLayer>()->forward(tgt, pos, reference, features, mask);
    auto delta = box_heads[l]->as<Mlp>()->forward(tgt);
    auto refined = torch::sigmoid(box_ops::inverse_sigmoid(reference) + delta);
    out.embeddings.push_back(tgt);
    out.boxes.push_back(refined);
    reference = refined.detach();
  }
  return out;
}

DetectionDecoderStack clone_object_to_subject(const DetectionDecoderStack& object_stack) {
  DetectionDecoderStack copy(object_stack->options(), object_stack->num_queries());
  torch::NoGradGuard no_grad;
  auto src = object_stack->named_parameters(true);
  for (auto& p : copy->named_parameters(true)) p.value().copy_(src[p.key()]);
  auto src_buffers = object_stack->named_buffers(true);
  for (auto& b : copy->named_buffers(true)) b.value().copy_(src_buffers[b.key()]);
  auto dtype = object_stack->anchor_logits.scalar_type();
  copy->to(dtype);
  return copy;
}

SOFusionImpl::SOFusionImpl(int64_t dim, int64_t heads, bool cross_attention) : cross_attention_(cross_attention) {
  cross_attn = register_module("cross_attn", MultiHeadAttention(dim, heads));
}

std::vector<torch::Tensor> SOFusionImpl::forward(const std::vector<torch::Tensor>& subject,
                                                 const std::vector<torch::Tensor>& object,
                                                 const torch::Tensor& verb_priors) {
  if (subject.size() != object.size()) throw std::invalid_argument("subject/object layer counts differ");
  std::vector<torch::Tensor> fused;
  fused.reserve(subject.size());
  torch::Tensor previous;
  for (size_t i = 0; i < subject.size(); ++i) {
    if (!subject[i].sizes().equals(object[i].sizes())) throw std::invalid_argument("subject/object shapes differ");
    auto so = (object[i] + subject[i]) / 2.0;
    if (!cross_attention_) {
      fused.push_back(so);
      continue;
    }
    auto residual = cross_attn(so, verb_priors, verb_priors) + so;
    fused.push_back(previous.defined() ? (previous + residual) / 2.0 : residual);
    previous = residual;
  }
  return fused;
}

VerbDecoderImpl::VerbDecoderImpl(const DecoderOptions& o) : options_(o) {
  layers = register_module("layers", nn::ModuleList());
  for (int64_t l = 0; l < o.layers; ++l) layers->push_back(DecoderLayer(o));
  pos_head = register_module("pos_head", Mlp(o.dim, o.dim, o.dim, 2));
}

std::vector<torch::Tensor> VerbDecoderImpl::forward(const std::vector<torch::Tensor>& verb_queries,
                                                    const MultiScaleFeatures& features, const torch::Tensor& verb_boxes,
                                                    const torch::Tensor& mask) {
  if (static_cast<int64_t>(verb_queries.size()) != options_.layers) {
    throw std::invalid_argument("verb decoder needs one fused query per layer");
  }
  if (verb_boxes.size(0) != verb_queries[0].size(0) || verb_boxes.size(1) != verb_queries[0].size(1)) {
    throw std::invalid_argument("one verb box per query is required");
  }
  auto pos = pos_head(positional_encode_boxes(verb_boxes, options_.dim));
  std::vector<torch::Tensor> out;
  torch::Tensor tgt;
  for (int64_t l = 0; l < options_.layers; ++l) {
    auto input = tgt.defined() ? tgt + verb_queries[l] : verb_queries[l];
    tgt = layers[l]->as<DecoderLayer>()->forward(input, pos, verb_boxes, features, mask);
    out.push_back(tgt);
  }
  return out;
}

}  // namespace sovstg

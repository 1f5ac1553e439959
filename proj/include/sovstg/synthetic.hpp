// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sovstg/types.hpp"

namespace sovstg {

/// Generator settings for the synthetic human-object scenes. One person per
/// image interacts with every object in the scene.
struct SceneSpec {
  int canvas = 64;
  int64_t num_train = 2000;
  int64_t num_test = 500;
  int64_t num_objects = 6;  // taken from the archetype table, in order
  int64_t num_verbs = 5;    // taken from the relation table, in order
  int min_instances = 1;
  int max_instances = 2;
  double skew = 1.0;            // frequency ratio between the most and least common object class
  double adjacency_gap = 0.05;  // normalised gap below which a pair counts as "holding"
  double pixel_noise = 0.04;
  bool render = true;
  uint64_t seed = 2024;

  /// Throws std::invalid_argument on an unsatisfiable spec.
  void validate() const;
};

SceneSpec load_scene_spec(const std::filesystem::path& path);

/// Names of every object archetype and relation the generator knows about.
const std::vector<std::string>& object_archetypes();
const std::vector<std::string>& relation_names();

/// Geometric oracle: the verb multi-hot for a (subject, object) pair. The
/// four position relations ("above", "below", "beside", "overlapping") are
/// mutually exclusive and exhaustive; "holding" (adjacency) may co-occur with
/// the first three.
std::vector<uint8_t> oracle_verbs(const Box& subject, const Box& object, int64_t num_verbs, double adjacency_gap);

/// One random scene with image id `id`.
ImageAnnotation sample_scene(const SceneSpec& spec, int64_t id, std::mt19937_64& rng);

/// Rasterises a scene as (3, canvas, canvas) uint8; the background texture is
/// seeded from (spec.seed, image id).
torch::Tensor render_scene(const ImageAnnotation& image, const SceneSpec& spec);

/// HOI classes = observed (object, verb) pairs, sorted.
Vocabulary build_vocabulary(const std::vector<ImageAnnotation>& train, int64_t num_objects, int64_t num_verbs);

struct GeneratedDataset {
  Vocabulary vocab;
  std::vector<ImageAnnotation> train;
  std::vector<ImageAnnotation> test;
};

GeneratedDataset generate_annotations(const SceneSpec& spec);

/// Writes train.json, test.json, class_counts.csv, scene.cfg and (when
/// rendering) images/<split>/<id>.ppm under `out`.
GeneratedDataset generate_dataset(const SceneSpec& spec, const std::filesystem::path& out);

/// Annotation JSON round trip.
std::string annotations_to_json(const Vocabulary& vocab, const std::vector<ImageAnnotation>& images);
void parse_annotations_json(const std::string& text, Vocabulary& vocab, std::vector<ImageAnnotation>& images);

void write_ppm(const std::filesystem::path& path, const torch::Tensor& image);
torch::Tensor read_ppm(const std::filesystem::path& path);

/// One split loaded from a dataset directory. `pixels` is (N, 3, H, W) in
/// [0,1]; scenes whose image file is missing are rasterised on the fly.
struct DatasetSplit {
  Vocabulary vocab;
  std::vector<ImageAnnotation> images;
  torch::Tensor pixels;
};

DatasetSplit load_split(const std::filesystem::path& dir, const std::string& split);

}  // namespace sovstg

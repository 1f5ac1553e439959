// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sovstg/geometry.hpp"

namespace sovstg {

/// Ground-truth interaction: subject box, object box and class, and the
/// multi-hot verb vector over the verb vocabulary.
struct HOIInstance {
  Box subject;
  Box object;
  int64_t object_class = 0;
  std::vector<uint8_t> verbs;

  std::vector<int64_t> verb_indices() const {
    std::vector<int64_t> out;
    for (size_t v = 0; v < verbs.size(); ++v)
      if (verbs[v]) out.push_back(static_cast<int64_t>(v));
    return out;
  }
};

struct ImageAnnotation {
  int64_t id = 0;
  std::string file;
  int width = 0;
  int height = 0;
  std::vector<HOIInstance> hois;
};

/// Object and verb names plus the HOI class table (observed (object, verb)
/// pairs).
struct Vocabulary {
  std::vector<std::string> objects;
  std::vector<std::string> verbs;
  std::vector<std::pair<int64_t, int64_t>> hoi_classes;  // (object, verb)

  int64_t num_objects() const { return static_cast<int64_t>(objects.size()); }
  int64_t num_verbs() const { return static_cast<int64_t>(verbs.size()); }
  int64_t num_hoi() const { return static_cast<int64_t>(hoi_classes.size()); }

  /// Index of (object, verb) in hoi_classes, or -1.
  int64_t hoi_index(int64_t object_class, int64_t verb) const {
    for (size_t i = 0; i < hoi_classes.size(); ++i)
      if (hoi_classes[i].first == object_class && hoi_classes[i].second == verb) return static_cast<int64_t>(i);
    return -1;
  }
};

}  // namespace sovstg

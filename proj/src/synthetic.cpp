// Copyright 2026 The SOV-STG Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

#include "sovstg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "sovstg/config.hpp"
#include "sovstg/geometry.hpp"

namespace sovstg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Shape { kCircle, kSquare, kTriangle, kDiamond };

struct Archetype {
  std::string name;
  Shape shape;
  std::array<float, 3> color;
};

const std::vector<Archetype>& archetypes() {
  static const std::vector<Archetype> table = {
      {"ball", Shape::kCircle, {0.90f, 0.15f, 0.15f}},  {"box", Shape::kSquare, {0.15f, 0.80f, 0.25f}},
      {"cone", Shape::kTriangle, {0.20f, 0.35f, 0.95f}}, {"cup", Shape::kCircle, {0.95f, 0.85f, 0.15f}},
      {"book", Shape::kSquare, {0.15f, 0.85f, 0.85f}},   {"kite", Shape::kTriangle, {0.95f, 0.55f, 0.10f}},
      {"gem", Shape::kDiamond, {0.75f, 0.20f, 0.85f}},   {"plate", Shape::kCircle, {0.55f, 0.35f, 0.20f}},
      {"flag", Shape::kDiamond, {0.95f, 0.45f, 0.70f}},
  };
  return table;
}

constexpr std::array<float, 3> kPersonColor{0.92f, 0.92f, 0.92f};

// Portable uniform draws; std distributions are implementation-defined.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
}

struct PixelRect {
  int x0, y0, x1, y1;  // half-open

  Box to_box(int canvas) const {
    const double c = canvas;
    return {(x0 + x1) / (2.0 * c), (y0 + y1) / (2.0 * c), (x1 - x0) / c, (y1 - y0) / c};
  }
  bool intersects(const PixelRect& o) const { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }
  bool inside(int canvas) const { return x0 >= 0 && y0 >= 0 && x1 <= canvas && y1 <= canvas; }
};

PixelRect to_pixels(const Box& b, int canvas) {
  return {static_cast<int>(std::lround(b.x1() * canvas)), static_cast<int>(std::lround(b.y1() * canvas)),
          static_cast<int>(std::lround(b.x2() * canvas)), static_cast<int>(std::lround(b.y2() * canvas))};
}

int64_t pick_object_class(const SceneSpec& spec, std::mt19937_64& rng) {
  // Geometric frequency decay: class c has weight skew^(-c/(C-1)).
  std::vector<double> weights(spec.num_objects);
  double total = 0.0;
  for (int64_t c = 0; c < spec.num_objects; ++c) {
    const double t = spec.num_objects > 1 ? static_cast<double>(c) / (spec.num_objects - 1) : 0.0;
    weights[c] = std::pow(spec.skew, -t);
    total += weights[c];
  }
  double u = uniform01(rng) * total;
  for (int64_t c = 0; c < spec.num_objects; ++c) {
    if (u < weights[c]) return c;
    u -= weights[c];
  }
  return spec.num_objects - 1;
}

// Places an object of size (w, h) relative to the person according to a
// target relation; the oracle relabels the result anyway.
PixelRect place_object(const PixelRect& p, int w, int h, int relation, bool near, std::mt19937_64& rng) {
  const int gap = near ? uniform_int(rng, 0, 1) : uniform_int(rng, 5, 12);
  const int pcx = (p.x0 + p.x1) / 2;
  int x0 = 0, y0 = 0;
  switch (relation) {
    case 0: {  // above
      x0 = pcx - w / 2 + uniform_int(rng, -(p.x1 - p.x0) / 2, (p.x1 - p.x0) / 2);
      y0 = p.y0 - gap - h;
      break;
    }
    case 1: {  // below
      x0 = pcx - w / 2 + uniform_int(rng, -(p.x1 - p.x0) / 2, (p.x1 - p.x0) / 2);
      y0 = p.y1 + gap;
      break;
    }
    case 2: {  // beside
      const bool left = uniform01(rng) < 0.5;
      x0 = left ? p.x0 - gap - w : p.x1 + gap;
      y0 = uniform_int(rng, p.y0, p.y1 - 1) - h / 2;
      break;
    }
    default: {  // overlapping
      x0 = uniform_int(rng, p.x0, p.x1 - 1) - w / 2;
      y0 = uniform_int(rng, p.y0, p.y1 - 1) - h / 2;
      break;
    }
  }
  return {x0, y0, x0 + w, y0 + h};
}

}  // namespace

void SceneSpec::validate() const {
  if (canvas < 32) throw std::invalid_argument("scene.canvas must be at least 32");
  if (num_train < 1 || num_test < 1) throw std::invalid_argument("scene needs at least one train and test image");
  if (num_objects < 1 || num_objects > static_cast<int64_t>(archetypes().size())) {
    throw std::invalid_argument("scene.objects must be in [1, " + std::to_string(archetypes().size()) + "]");
  }
  if (num_verbs < 1 || num_verbs > static_cast<int64_t>(relation_names().size())) {
    throw std::invalid_argument("scene.verbs must be in [1, " + std::to_string(relation_names().size()) + "]");
  }
  if (min_instances < 1 || max_instances < min_instances || max_instances > 4) {
    throw std::invalid_argument("scene instances must satisfy 1 <= min <= max <= 4");
  }
  if (skew < 1.0) throw std::invalid_argument("scene.skew must be >= 1");
  if (adjacency_gap <= 0.0) throw std::invalid_argument("scene.adjacency_gap must be positive");
}

SceneSpec load_scene_spec(const fs::path& path) {
  const auto doc = KeyValueDocument::load(path);
  SceneSpec s;
  s.canvas = static_cast<int>(doc.get_int("scene.canvas", s.canvas));
  s.num_train = doc.get_int("scene.train_images", s.num_train);
  s.num_test = doc.get_int("scene.test_images", s.num_test);
  s.num_objects = doc.get_int("scene.objects", s.num_objects);
  s.num_verbs = doc.get_int("scene.verbs", s.num_verbs);
  s.min_instances = static_cast<int>(doc.get_int("scene.min_instances", s.min_instances));
  s.max_instances = static_cast<int>(doc.get_int("scene.max_instances", s.max_instances));
  s.skew = doc.get_double("scene.skew", s.skew);
  s.adjacency_gap = doc.get_double("scene.adjacency_gap", s.adjacency_gap);
  s.pixel_noise = doc.get_double("scene.pixel_noise", s.pixel_noise);
  s.render = doc.get_bool("scene.render", s.render);
  s.seed = static_cast<uint64_t>(doc.get_int("scene.seed", static_cast<int64_t>(s.seed)));
  doc.reject_unused();
  s.validate();
  return s;
}

const std::vector<std::string>& object_archetypes() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& a : archetypes()) n.push_back(a.name);
    return n;
  }();
  return names;
}

const std::vector<std::string>& relation_names() {
  static const std::vector<std::string> names = {"above", "below", "beside", "overlapping", "holding"};
  return names;
}

std::vector<uint8_t> oracle_verbs(const Box& s, const Box& o, int64_t num_verbs, double adjacency_gap) {
  std::vector<uint8_t> verbs(num_verbs, 0);
  auto set = [&](int64_t v) {
    if (v < num_verbs) verbs[v] = 1;
  };
  const bool overlapping = intersection_area(s, o) > 0.0;
  if (overlapping) {
    set(3);
  } else {
    if (o.cy < s.y1()) {
      set(0);
    } else if (o.cy > s.y2()) {
      set(1);
    } else {
      set(2);
    }
    const double dx = std::max({0.0, o.x1() - s.x2(), s.x1() - o.x2()});
    const double dy = std::max({0.0, o.y1() - s.y2(), s.y1() - o.y2()});
    if (std::max(dx, dy) <= adjacency_gap) set(4);
  }
  return verbs;
}

ImageAnnotation sample_scene(const SceneSpec& spec, int64_t id, std::mt19937_64& rng) {
  const int c = spec.canvas;
  const double scale = c / 64.0;
  auto px = [&](double v) { return std::max(2, static_cast<int>(std::lround(v * scale))); };
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ImageAnnotation img;
    img.id = id;
    img.width = c;
    img.height = c;
    const int pw = uniform_int(rng, px(10), px(16));
    const int ph = uniform_int(rng, px(22), px(32));
    const int margin = px(6);
    if (c - pw - 2 * margin < 0 || c - ph - 2 * margin < 0) throw std::invalid_argument("canvas too small");
    const int pxo = uniform_int(rng, margin, c - pw - margin);
    const int pyo = uniform_int(rng, margin, c - ph - margin);
    const PixelRect person{pxo, pyo, pxo + pw, pyo + ph};
    const int k = uniform_int(rng, spec.min_instances, spec.max_instances);
    std::vector<PixelRect> placed;
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      ok = false;
      const int64_t cls = pick_object_class(spec, rng);
      for (int tries = 0; tries < 50 && !ok; ++tries) {
        const int w = uniform_int(rng, px(9), px(15));
        const int h = uniform_int(rng, px(9), px(15));
        const int relation = uniform_int(rng, 0, 3);
        const bool near = uniform01(rng) < 0.5;
        const auto r = place_object(person, w, h, relation, near, rng);
        if (!r.inside(c)) continue;
        // Objects never touch each other, so every shape stays fully visible.
        const PixelRect grown{r.x0 - 1, r.y0 - 1, r.x1 + 1, r.y1 + 1};
        if (std::any_of(placed.begin(), placed.end(), [&](const PixelRect& q) { return grown.intersects(q); })) {
          continue;
        }
        placed.push_back(r);
        HOIInstance h_inst;
        h_inst.subject = person.to_box(c);
        h_inst.object = r.to_box(c);
        h_inst.object_class = cls;
        h_inst.verbs = oracle_verbs(h_inst.subject, h_inst.object, spec.num_verbs, spec.adjacency_gap);
        ok = true;
        // An instance whose relations all fall outside the verb vocabulary is
        // not an interaction; try another placement.
        if (h_inst.verb_indices().empty()) {
          placed.pop_back();
          ok = false;
          continue;
        }
        img.hois.push_back(h_inst);
      }
    }
    if (ok && !img.hois.empty()) return img;
  }
  throw std::runtime_error("scene sampler failed to place objects; the spec is unsatisfiable");
}

torch::Tensor render_scene(const ImageAnnotation& image, const SceneSpec& spec) {
  const int c = spec.canvas;
  std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(image.id) + 1);
  std::vector<float> pix(3 * c * c);
  const float base = 0.12f;
  for (auto& v : pix) v = base + static_cast<float>(spec.pixel_noise * (2.0 * uniform01(rng) - 1.0));
  auto put = [&](int x, int y, const std::array<float, 3>& col) {
    if (x < 0 || y < 0 || x >= c || y >= c) return;
    for (int ch = 0; ch < 3; ++ch) pix[(ch * c + y) * c + x] = col[ch];
  };

  if (!image.hois.empty()) {
    // The person: a head disc over a torso bar spanning the subject box.
    const auto p = to_pixels(image.hois.front().subject, c);
    const int w = p.x1 - p.x0;
    const int head = std::max(3, std::min(w, (p.y1 - p.y0) / 3));
    const double hcx = (p.x0 + p.x1) / 2.0;
    const double hcy = p.y0 + head / 2.0;
    for (int y = p.y0; y < p.y0 + head; ++y)
      for (int x = p.x0; x < p.x1; ++x)
        if (std::hypot(x + 0.5 - hcx, y + 0.5 - hcy) <= head / 2.0) put(x, y, kPersonColor);
    const int bar = std::max(2, w / 4);
    for (int y = p.y0 + head; y < p.y1; ++y) {
      const bool arms = y < p.y0 + head + std::max(2, (p.y1 - p.y0) / 6);
      for (int x = p.x0; x < p.x1; ++x) {
        const bool torso = std::abs(x + 0.5 - hcx) <= bar;
        if (torso || arms) put(x, y, kPersonColor);
      }
    }
  }
  for (const auto& h : image.hois) {
    const auto r = to_pixels(h.object, c);
    const auto& a = archetypes().at(h.object_class);
    const double cx = (r.x0 + r.x1) / 2.0, cy = (r.y0 + r.y1) / 2.0;
    const double rx = (r.x1 - r.x0) / 2.0, ry = (r.y1 - r.y0) / 2.0;
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const double u = (x + 0.5 - cx) / rx, v = (y + 0.5 - cy) / ry;  // in [-1, 1]
        bool inside = false;
        switch (a.shape) {
          case Shape::kCircle:
            inside = u * u + v * v <= 1.15;
            break;
          case Shape::kSquare:
            inside = true;
            break;
          case Shape::kTriangle:
            inside = std::abs(u) <= (v + 1.0) / 2.0 + 0.1;
            break;
          case Shape::kDiamond:
            inside = std::abs(u) + std::abs(v) <= 1.1;
            break;
        }
        if (inside) put(x, y, a.color);
      }
    }
  }
  auto t = torch::from_blob(pix.data(), {3, c, c}, torch::kFloat32).clone();
  return (t.clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8);
}

Vocabulary build_vocabulary(const std::vector<ImageAnnotation>& train, int64_t num_objects, int64_t num_verbs) {
  Vocabulary vocab;
  vocab.objects.assign(object_archetypes().begin(), object_archetypes().begin() + num_objects);
  vocab.verbs.assign(relation_names().begin(), relation_names().begin() + num_verbs);
  std::set<std::pair<int64_t, int64_t>> seen;
  for (const auto& img : train)
    for (const auto& h : img.hois)
      for (auto v : h.verb_indices()) seen.emplace(h.object_class, v);
  vocab.hoi_classes.assign(seen.begin(), seen.end());
  return vocab;
}

GeneratedDataset generate_annotations(const SceneSpec& spec) {
  spec.validate();
  GeneratedDataset d;
  std::mt19937_64 train_rng(spec.seed);
  std::mt19937_64 test_rng(spec.seed ^ 0xD1B54A32D192ED03ull);
  for (int64_t i = 0; i < spec.num_train; ++i) {
    auto img = sample_scene(spec, i, train_rng);
    img.file = "images/train/" + std::to_string(i) + ".ppm";
    d.train.push_back(std::move(img));
  }
  for (int64_t i = 0; i < spec.num_test; ++i) {
    auto img = sample_scene(spec, spec.num_train + i, test_rng);
    img.file = "images/test/" + std::to_string(spec.num_train + i) + ".ppm";
    d.test.push_back(std::move(img));
  }
  d.vocab = build_vocabulary(d.train, spec.num_objects, spec.num_verbs);
  return d;
}

namespace {

json box_json(const Box& b) { return json::array({b.cx, b.cy, b.w, b.h}); }

Box json_box(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [cx, cy, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

SceneSpec spec_from_dataset(const fs::path& dir) {
  const auto path = dir / "scene.cfg";
  return fs::exists(path) ? load_scene_spec(path) : SceneSpec{};
}

}  // namespace

std::string annotations_to_json(const Vocabulary& vocab, const std::vector<ImageAnnotation>& images) {
  json root;
  root["format"] = "sovstg-annotations/1";
  root["objects"] = vocab.objects;
  root["verbs"] = vocab.verbs;
  json hoi = json::array();
  for (const auto& [o, v] : vocab.hoi_classes) hoi.push_back(json::array({o, v}));
  root["hoi_classes"] = hoi;
  json imgs = json::array();
  for (const auto& img : images) {
    json ji;
    ji["id"] = img.id;
    ji["file"] = img.file;
    ji["width"] = img.width;
    ji["height"] = img.height;
    json hs = json::array();
    for (const auto& h : img.hois) {
      json jh;
      jh["subject"] = box_json(h.subject);
      jh["object"] = box_json(h.object);
      jh["object_class"] = h.object_class;
      jh["verbs"] = h.verbs;
      hs.push_back(jh);
    }
    ji["hois"] = hs;
    imgs.push_back(ji);
  }
  root["images"] = imgs;
  return root.dump(1) + "\n";
}

void parse_annotations_json(const std::string& text, Vocabulary& vocab, std::vector<ImageAnnotation>& images) {
  const auto root = json::parse(text);
  if (root.value("format", "") != "sovstg-annotations/1") throw std::invalid_argument("unknown annotation format");
  vocab.objects = root.at("objects").get<std::vector<std::string>>();
  vocab.verbs = root.at("verbs").get<std::vector<std::string>>();
  vocab.hoi_classes.clear();
  for (const auto& p : root.at("hoi_classes")) vocab.hoi_classes.emplace_back(p.at(0).get<int64_t>(), p.at(1).get<int64_t>());
  images.clear();
  for (const auto& ji : root.at("images")) {
    ImageAnnotation img;
    img.id = ji.at("id").get<int64_t>();
    img.file = ji.value("file", "");
    img.width = ji.at("width").get<int>();
    img.height = ji.at("height").get<int>();
    for (const auto& jh : ji.at("hois")) {
      HOIInstance h;
      h.subject = json_box(jh.at("subject"));
      h.object = json_box(jh.at("object"));
      h.object_class = jh.at("object_class").get<int64_t>();
      h.verbs = jh.at("verbs").get<std::vector<uint8_t>>();
      if (h.object_class < 0 || h.object_class >= vocab.num_objects()) throw std::invalid_argument("object class out of range");
      if (static_cast<int64_t>(h.verbs.size()) != vocab.num_verbs()) throw std::invalid_argument("verb vector has the wrong length");
      img.hois.push_back(h);
    }
    images.push_back(std::move(img));
  }
}

void write_ppm(const fs::path& path, const torch::Tensor& image) {
  auto hwc = image.to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << hwc.size(1) << " " << hwc.size(0) << "\n255\n";
  out.write(reinterpret_cast<const char*>(hwc.data_ptr<uint8_t>()), hwc.numel());
}

torch::Tensor read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0) throw std::runtime_error("unsupported image " + path.string());
  auto hwc = torch::empty({h, w, 3}, torch::kUInt8);
  in.read(reinterpret_cast<char*>(hwc.data_ptr<uint8_t>()), hwc.numel());
  if (!in) throw std::runtime_error("truncated image " + path.string());
  return hwc.permute({2, 0, 1}).contiguous();
}

GeneratedDataset generate_dataset(const SceneSpec& spec, const fs::path& out) {
  auto d = generate_annotations(spec);
  fs::create_directories(out);
  write_text(out / "train.json", annotations_to_json(d.vocab, d.train));
  write_text(out / "test.json", annotations_to_json(d.vocab, d.test));

  std::ostringstream cfg;
  cfg << "scene.canvas = " << spec.canvas << "\nscene.train_images = " << spec.num_train
      << "\nscene.test_images = " << spec.num_test << "\nscene.objects = " << spec.num_objects
      << "\nscene.verbs = " << spec.num_verbs << "\nscene.min_instances = " << spec.min_instances
      << "\nscene.max_instances = " << spec.max_instances << "\nscene.skew = " << spec.skew
      << "\nscene.adjacency_gap = " << spec.adjacency_gap << "\nscene.pixel_noise = " << spec.pixel_noise
      << "\nscene.render = " << (spec.render ? "true" : "false") << "\nscene.seed = " << spec.seed << "\n";
  write_text(out / "scene.cfg", cfg.str());

  std::map<std::pair<int64_t, int64_t>, int64_t> counts;
  for (const auto& img : d.train)
    for (const auto& h : img.hois)
      for (auto v : h.verb_indices()) ++counts[{h.object_class, v}];
  std::ostringstream csv;
  csv << "hoi_class,object,verb,train_count\n";
  for (size_t i = 0; i < d.vocab.hoi_classes.size(); ++i) {
    const auto& [o, v] = d.vocab.hoi_classes[i];
    csv << i << "," << d.vocab.objects[o] << "," << d.vocab.verbs[v] << "," << counts[{o, v}] << "\n";
  }
  write_text(out / "class_counts.csv", csv.str());

  if (spec.render) {
    fs::create_directories(out / "images" / "train");
    fs::create_directories(out / "images" / "test");
    for (const auto* split : {&d.train, &d.test})
      for (const auto& img : *split) write_ppm(out / img.file, render_scene(img, spec));
  }
  return d;
}

DatasetSplit load_split(const fs::path& dir, const std::string& split) {
  if (split != "train" && split != "test") throw std::invalid_argument("split must be train or test");
  DatasetSplit s;
  parse_annotations_json(read_text(dir / (split + ".json")), s.vocab, s.images);
  if (split == "test") {
    // HOI classes are defined by the training split.
    Vocabulary train_vocab;
    std::vector<ImageAnnotation> unused;
    parse_annotations_json(read_text(dir / "train.json"), train_vocab, unused);
    s.vocab = train_vocab;
  }
  const auto spec = spec_from_dataset(dir);
  std::vector<torch::Tensor> pixels;
  pixels.reserve(s.images.size());
  for (const auto& img : s.images) {
    const auto path = dir / img.file;
    auto raw = (!img.file.empty() && fs::exists(path)) ? read_ppm(path) : render_scene(img, spec);
    pixels.push_back(raw.to(torch::kFloat32) / 255.0);
  }
  s.pixels = pixels.empty() ? torch::zeros({0, 3, spec.canvas, spec.canvas}) : torch::stack(pixels);
  return s;
}

}  // namespace sovstg

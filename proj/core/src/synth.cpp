// Copyright 2026 The tatm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tatm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "json.hpp"
#include "tatm/config.hpp"
#include "tatm/error.hpp"
#include "tatm/formats.hpp"

namespace tatm {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// mt19937_64 is specified bit-for-bit; the std distributions are not, so the
// draws are derived by hand to keep output identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

 private:
  std::mt19937_64 gen_;
};

template <typename T>
T get_field(const json& j, const char* key, const std::string& source) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(source + ": field '" + key + "' is missing or has the wrong type");
  }
}

std::pair<double, double> get_range(const json& j, const char* key, const std::string& source) {
  const auto& r = j.at(key);
  if (r.is_number()) return {r.get<double>(), r.get<double>()};
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
    throw ConfigError(source + ": '" + key + "' must be a number or a [lo, hi] pair");
  }
  return {r[0].get<double>(), r[1].get<double>()};
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

int class_ref(const json& v, const std::vector<std::string>& classes, const std::string& source) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    const auto it = std::find(classes.begin(), classes.end(), v.get<std::string>());
    if (it == classes.end()) throw ConfigError(source + ": unknown class '" + v.get<std::string>() + "'");
    return static_cast<int>(it - classes.begin());
  }
  throw ConfigError(source + ": class must be an index or a name");
}

bool collides(const Box& a, const Box& b, int gap) {
  return a.x1 < b.x2 + gap && b.x1 < a.x2 + gap && a.y1 < b.y2 + gap && b.y1 < a.y2 + gap;
}

std::vector<int> interior_lines(int dim, int tile) {
  std::vector<int> out;
  for (int v = tile; v < dim; v += tile) out.push_back(v);
  return out;
}

std::optional<Box> propose(const PlacementGroup& g, const ScenarioSpec& spec, Rng& rng) {
  const int w = rng.uniform_int(g.size_min, g.size_max);
  const int h = rng.uniform_int(g.size_min, g.size_max);
  if (w > spec.width || h > spec.height) return std::nullopt;
  if (g.placement == PlacementKind::kUniform) {
    const int x = rng.uniform_int(0, spec.width - w);
    const int y = rng.uniform_int(0, spec.height - h);
    return Box{double(x), double(y), double(x + w), double(y + h)};
  }
  const auto xs = interior_lines(spec.width, spec.reference_tile);
  const auto ys = interior_lines(spec.height, spec.reference_tile);
  char axis = g.axis;
  if (axis == 'a') axis = xs.empty() ? 'y' : ys.empty() ? 'x' : (rng.uniform() < 0.5 ? 'x' : 'y');
  const auto& lines = axis == 'x' ? xs : ys;
  if (lines.empty()) return std::nullopt;
  const int line = lines[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(lines.size()) - 1))];
  const double delta = rng.uniform(g.delta_min, g.delta_max);
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const int along = axis == 'x' ? w : h;
  // Integer corner whose centre is as close as possible to line + sign*delta
  // while staying inside [delta_min, delta_max).
  const double centre = line + sign * delta;
  const int lo = static_cast<int>(std::floor(centre - along / 2.0));
  int c1 = lo;
  for (int cand : {lo, lo + 1}) {
    const double d = std::abs(cand + along / 2.0 - line);
    if (d >= g.delta_min && d < g.delta_max) {
      c1 = cand;
      break;
    }
  }
  const int other_dim = axis == 'x' ? spec.height : spec.width;
  const int across = axis == 'x' ? h : w;
  const int c2 = rng.uniform_int(0, other_dim - across);
  const int limit = (axis == 'x' ? spec.width : spec.height) - along;
  if (c1 < 0 || c1 > limit) return std::nullopt;
  const double d = std::abs(c1 + along / 2.0 - line);
  if (d < g.delta_min || d >= g.delta_max) return std::nullopt;
  if (axis == 'x') return Box{double(c1), double(c2), double(c1 + w), double(c2 + h)};
  return Box{double(c2), double(c1), double(c2 + w), double(c1 + h)};
}

}  // namespace

void ScenarioSpec::validate() const {
  if (classes.empty()) throw ConfigError("scenario: at least one class is required");
  if (image_count < 0) throw ConfigError("scenario: images.count must be >= 0");
  if (width <= 0 || height <= 0) throw ConfigError("scenario: image dimensions must be positive");
  if (reference_tile <= 0) throw ConfigError("scenario: reference_tile must be positive");
  const int n = static_cast<int>(classes.size());
  for (const auto& g : groups) {
    if (g.count < 0) throw ConfigError("scenario: group count must be >= 0");
    if (g.class_id < 0 || g.class_id >= n) throw ConfigError("scenario: group class out of range");
    if (g.size_min <= 0 || g.size_max < g.size_min) throw ConfigError("scenario: bad group size range");
    if (g.delta_min < 0.0 || g.delta_max <= g.delta_min) throw ConfigError("scenario: bad delta range");
    if (g.axis != 'x' && g.axis != 'y' && g.axis != 'a') throw ConfigError("scenario: axis must be x, y or any");
  }
  for (const auto& p : placements) {
    if (p.image < 0 || p.image >= image_count) throw ConfigError("scenario: placement image out of range");
    if (p.class_id < 0 || p.class_id >= n) throw ConfigError("scenario: placement class out of range");
    if (!is_valid(p.box) || p.box.x1 < 0 || p.box.y1 < 0 || p.box.x2 > width || p.box.y2 > height ||
        p.box.area() <= 0.0) {
      throw ConfigError("scenario: placement box must have positive area inside the image");
    }
  }
}

ScenarioSpec parse_scenario(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": expected an object");
  check_keys(j, {"id", "seed", "classes", "images", "reference_tile", "min_gap", "groups", "placements"}, source);
  ScenarioSpec s;
  if (j.contains("id")) s.id = get_field<std::string>(j, "id", source);
  if (j.contains("seed")) s.seed = get_field<std::uint64_t>(j, "seed", source);
  if (j.contains("classes")) s.classes = get_field<std::vector<std::string>>(j, "classes", source);
  if (j.contains("images")) {
    const auto& im = j["images"];
    check_keys(im, {"count", "width", "height"}, source + ": images");
    if (im.contains("count")) s.image_count = get_field<int>(im, "count", source);
    if (im.contains("width")) s.width = get_field<int>(im, "width", source);
    if (im.contains("height")) s.height = get_field<int>(im, "height", source);
  }
  if (j.contains("reference_tile")) s.reference_tile = get_field<int>(j, "reference_tile", source);
  if (j.contains("min_gap")) s.min_gap = get_field<int>(j, "min_gap", source);
  for (const auto& gj : j.value("groups", json::array())) {
    check_keys(gj, {"count", "class", "size", "placement", "delta", "axis"}, source + ": group");
    PlacementGroup g;
    g.count = get_field<int>(gj, "count", source);
    if (gj.contains("class")) g.class_id = class_ref(gj["class"], s.classes, source);
    if (gj.contains("size")) {
      const auto [lo, hi] = get_range(gj, "size", source);
      g.size_min = static_cast<int>(lo);
      g.size_max = static_cast<int>(hi);
    }
    const std::string placement = gj.value("placement", std::string("uniform"));
    if (placement == "uniform") {
      g.placement = PlacementKind::kUniform;
    } else if (placement == "boundary") {
      g.placement = PlacementKind::kBoundary;
    } else {
      throw ConfigError(source + ": placement must be 'uniform' or 'boundary'");
    }
    if (gj.contains("delta")) {
      const auto [lo, hi] = get_range(gj, "delta", source);
      g.delta_min = lo;
      g.delta_max = hi;
    }
    const std::string axis = gj.value("axis", std::string("any"));
    g.axis = axis == "x" ? 'x' : axis == "y" ? 'y' : axis == "any" ? 'a' : '?';
    s.groups.push_back(g);
  }
  for (const auto& pj : j.value("placements", json::array())) {
    check_keys(pj, {"image", "class", "box"}, source + ": placement");
    ExplicitPlacement p;
    p.image = pj.value("image", 0);
    if (pj.contains("class")) p.class_id = class_ref(pj["class"], s.classes, source);
    const auto b = get_field<std::vector<double>>(pj, "box", source);
    if (b.size() != 4) throw ConfigError(source + ": placement box must have 4 numbers");
    p.box = {b[0], b[1], b[2], b[3]};
    s.placements.push_back(p);
  }
  s.validate();
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text_file(path), path.string());
}

Dataset generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.id = spec.id;
  ds.classes.names = spec.classes;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) ds.classes.source_ids.push_back(static_cast<std::int64_t>(i) + 1);

  for (int idx = 0; idx < spec.image_count; ++idx) {
    Rng rng(splitmix64(spec.seed ^ static_cast<std::uint64_t>(idx)));
    AnnotatedImage img;
    char name[32];
    std::snprintf(name, sizeof name, "_%04d", idx);
    img.image_id = spec.id + name;
    img.file_name = img.image_id + ".png";
    img.width = spec.width;
    img.height = spec.height;
    for (const auto& p : spec.placements) {
      if (p.image == idx) img.annotations.push_back({p.class_id, p.box});
    }
    for (const auto& g : spec.groups) {
      for (int k = 0; k < g.count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
          const auto box = propose(g, spec, rng);
          if (!box) continue;
          const bool clear = std::none_of(img.annotations.begin(), img.annotations.end(),
                                          [&](const Annotation& a) { return collides(a.box, *box, spec.min_gap); });
          if (clear) {
            img.annotations.push_back({g.class_id, *box});
            placed = true;
          }
        }
        if (!placed) {
          throw ConfigError("scenario: could not place defect " + std::to_string(k) + " of a group in image " +
                            img.image_id + " (board too crowded or constraints unsatisfiable)");
        }
      }
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

// ---------------------------------------------------------------------------

double SimDetectorParams::curve_at(double v) const noexcept {
  if (curve.empty()) return 0.0;
  if (v <= curve.front().visible) return curve.front().multiplier;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    if (v <= b.visible) {
      const double t = (v - a.visible) / (b.visible - a.visible);
      return a.multiplier + t * (b.multiplier - a.multiplier);
    }
  }
  return curve.back().multiplier;
}

double SimDetectorParams::base_for(int class_id) const noexcept {
  if (base_confidence.empty()) return 0.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(class_id, 0)), base_confidence.size() - 1);
  return base_confidence[i];
}

void SimDetectorParams::validate() const {
  if (base_confidence.empty()) throw ConfigError("sim: base_confidence must not be empty");
  for (double b : base_confidence) {
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("sim: base_confidence values must lie in [0,1]");
  }
  if (curve.empty()) throw ConfigError("sim: curve needs at least one point");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& p = curve[i];
    if (!(p.visible >= 0.0 && p.visible <= 1.0)) throw ConfigError("sim: curve visible fractions must lie in [0,1]");
    if (!(p.multiplier >= 0.0 && p.multiplier <= 1.0)) throw ConfigError("sim: curve multipliers must lie in [0,1]");
    if (i > 0 && !(p.visible > curve[i - 1].visible)) {
      throw ConfigError("sim: curve points must have strictly increasing visible fractions");
    }
  }
  if (!(min_visible_fraction >= 0.0 && min_visible_fraction <= 1.0)) {
    throw ConfigError("sim: min_visible_fraction must lie in [0,1]");
  }
  if (min_apparent_area < 0.0) throw ConfigError("sim: min_apparent_area must be >= 0");
  if (fp_rate < 0.0) throw ConfigError("sim: fp_rate must be >= 0");
  if (!(fp_score_min >= 0.0 && fp_score_min <= fp_score_max && fp_score_max <= 1.0)) {
    throw ConfigError("sim: fp_score must be a range inside [0,1]");
  }
  if (fp_size_min <= 0 || fp_size_max < fp_size_min) throw ConfigError("sim: bad fp_size range");
  if (num_classes < 1) throw ConfigError("sim: num_classes must be >= 1");
  if (jitter < 0.0) throw ConfigError("sim: jitter must be >= 0");
}

SimDetectorParams parse_sim_params(std::string_view text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": expected an object");
  check_keys(j, {"base_confidence", "curve", "min_visible_fraction", "min_apparent_area", "fp_rate", "fp_score",
                 "fp_size", "num_classes", "jitter", "seed"},
             source);
  SimDetectorParams p;
  if (j.contains("base_confidence")) {
    const auto& b = j["base_confidence"];
    p.base_confidence = b.is_array() ? get_field<std::vector<double>>(j, "base_confidence", source)
                                     : std::vector<double>{get_field<double>(j, "base_confidence", source)};
  }
  if (j.contains("curve")) {
    p.curve.clear();
    for (const auto& pt : j["curve"]) {
      if (!pt.is_array() || pt.size() != 2) throw ConfigError(source + ": curve points are [visible, multiplier]");
      p.curve.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
  }
  if (j.contains("min_visible_fraction")) p.min_visible_fraction = get_field<double>(j, "min_visible_fraction", source);
  if (j.contains("min_apparent_area")) p.min_apparent_area = get_field<double>(j, "min_apparent_area", source);
  if (j.contains("fp_rate")) p.fp_rate = get_field<double>(j, "fp_rate", source);
  if (j.contains("fp_score")) std::tie(p.fp_score_min, p.fp_score_max) = get_range(j, "fp_score", source);
  if (j.contains("fp_size")) {
    const auto [lo, hi] = get_range(j, "fp_size", source);
    p.fp_size_min = static_cast<int>(lo);
    p.fp_size_max = static_cast<int>(hi);
  }
  if (j.contains("num_classes")) p.num_classes = get_field<int>(j, "num_classes", source);
  if (j.contains("jitter")) p.jitter = get_field<double>(j, "jitter", source);
  if (j.contains("seed")) p.seed = get_field<std::uint64_t>(j, "seed", source);
  p.validate();
  return p;
}

SimDetectorParams load_sim_params(const std::filesystem::path& path) {
  return parse_sim_params(read_text_file(path), path.string());
}

std::string sim_params_json(const SimDetectorParams& p) {
  ordered_json j;
  j["base_confidence"] = p.base_confidence;
  auto curve = ordered_json::array();
  for (const auto& c : p.curve) curve.push_back({c.visible, c.multiplier});
  j["curve"] = std::move(curve);
  j["min_visible_fraction"] = p.min_visible_fraction;
  j["min_apparent_area"] = p.min_apparent_area;
  j["fp_rate"] = p.fp_rate;
  j["fp_score"] = {p.fp_score_min, p.fp_score_max};
  j["fp_size"] = {p.fp_size_min, p.fp_size_max};
  j["num_classes"] = p.num_classes;
  j["jitter"] = p.jitter;
  j["seed"] = p.seed;
  return j.dump(2);
}

UnitResult simulate_detector(const WorkUnit& unit, const AnnotatedImage& image, const SimDetectorParams& params) {
  Rng rng(splitmix64(params.seed ^ fnv1a64(unit.unit_id)));
  const double w = unit.width;
  const double h = unit.height;
  const Box region{double(unit.x0), double(unit.y0), unit.x0 + w, unit.y0 + h};
  const double scale = unit.tile ? 1.0 : unit.scale;

  UnitResult r;
  r.unit_id = unit.unit_id;
  auto emit = [&](Box local, double score, int class_id) {
    if (params.jitter > 0.0) {
      Box j{local.x1 + rng.uniform(-params.jitter, params.jitter), local.y1 + rng.uniform(-params.jitter, params.jitter),
            local.x2 + rng.uniform(-params.jitter, params.jitter), local.y2 + rng.uniform(-params.jitter, params.jitter)};
      j = {std::clamp(j.x1, 0.0, w), std::clamp(j.y1, 0.0, h), std::clamp(j.x2, 0.0, w), std::clamp(j.y2, 0.0, h)};
      if (j.x2 > j.x1 && j.y2 > j.y1) local = j;
    }
    if (!unit.tile) local = rescale_box(local, scale);
    r.detections.push_back({local, std::clamp(score, 0.0, 1.0), class_id});
  };

  for (const auto& a : image.annotations) {
    const ClipResult c = clip_box(a.box, region);
    if (!c.clipped) continue;
    if (c.visible_fraction < params.min_visible_fraction) continue;
    if (c.clipped->area() * scale * scale < params.min_apparent_area) continue;
    const double score = params.base_for(a.class_id) * params.curve_at(c.visible_fraction);
    if (score <= 0.0) continue;
    emit(remap_to_local(*c.clipped, unit.origin()), score, a.class_id);
  }

  const int fps = rng.poisson(params.fp_rate);
  for (int k = 0; k < fps; ++k) {
    const int bw = rng.uniform_int(std::min(params.fp_size_min, unit.width), std::min(params.fp_size_max, unit.width));
    const int bh = rng.uniform_int(std::min(params.fp_size_min, unit.height), std::min(params.fp_size_max, unit.height));
    const int x = rng.uniform_int(0, unit.width - bw);
    const int y = rng.uniform_int(0, unit.height - bh);
    const int cls = rng.uniform_int(0, params.num_classes - 1);
    const double score = rng.uniform(params.fp_score_min, params.fp_score_max);
    emit(Box{double(x), double(y), double(x + bw), double(y + bh)}, score, cls);
  }
  if (!unit.tile) r.input_scale = std::array<double, 2>{scale, scale};
  return r;
}

SimulatedBackend::SimulatedBackend(SimDetectorParams params) : params_(std::move(params)) { params_.validate(); }

std::string SimulatedBackend::id() const { return "sim:" + std::to_string(params_.seed); }

std::vector<UnitResult> SimulatedBackend::detect(const AnnotatedImage& image, std::span<const WorkUnit> units) {
  std::vector<UnitResult> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(simulate_detector(u, image, params_));
  return out;
}

}  // namespace tatm

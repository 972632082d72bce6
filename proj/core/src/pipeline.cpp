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

#include "tatm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "tatm/error.hpp"
#include "tatm/parallel.hpp"
#include "tatm/synth.hpp"

namespace tatm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Same tolerance rule as boundary_distance: small overshoot is clipped, more
// is a malformed backend response.
Box clip_to_region(const Box& b, double w, double h, const std::string& unit_id) {
  if (!is_valid(b)) throw BackendError(unit_id + ": malformed box");
  if (b.x1 < -kTileSlopPx || b.y1 < -kTileSlopPx || b.x2 > w + kTileSlopPx ||
      b.y2 > h + kTileSlopPx) {
    throw BackendError(unit_id + ": box lies more than 2 px outside its region");
  }
  return {std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
          std::clamp(b.y2, 0.0, h)};
}

}  // namespace

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::kFull: return "full-" + std::to_string(input_size);
    case StrategyKind::kTileNms: return "tile-nms";
    case StrategyKind::kTileOverlapNms: return "tile-overlap-nms";
    case StrategyKind::kTileOverlapTaTm: return "tile-overlap-tatm";
  }
  return "?";
}

std::string Strategy::label() const {
  const std::string tile = "Tile-" + std::to_string(tile_size);
  switch (kind) {
    case StrategyKind::kFull: return "Full-" + std::to_string(input_size);
    case StrategyKind::kTileNms: return tile + " + NMS";
    case StrategyKind::kTileOverlapNms: return tile + " + Overlap + NMS";
    case StrategyKind::kTileOverlapTaTm: return tile + " + Overlap + TA-TM";
  }
  return "?";
}

void Strategy::validate() const {
  merge.validate();
  if (kind == StrategyKind::kFull) {
    if (input_size <= 0) throw ConfigError(name() + ": input size must be positive");
    return;
  }
  if (tile_size <= 0 || stride <= 0) throw ConfigError(name() + ": tile_size and stride must be positive");
  if (kind == StrategyKind::kTileNms && stride != tile_size) {
    throw ConfigError("tile-nms requires stride == tile_size");
  }
  if (kind != StrategyKind::kTileNms && stride >= tile_size) {
    throw ConfigError(name() + " requires stride < tile_size");
  }
}

Strategy parse_strategy(std::string_view name, const Config& cfg) {
  Strategy s;
  s.tile_size = cfg.tile_size;
  s.stride = cfg.stride;
  s.merge = cfg.merge_params();
  s.filter_after_adjust = cfg.filter_after_adjust;
  if (starts_with(name, "full-")) {
    s.kind = StrategyKind::kFull;
    const std::string digits(name.substr(5));
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw ConfigError("unknown strategy '" + std::string(name) + "'");
    }
    s.input_size = std::stoi(digits);
  } else if (name == "tile-nms") {
    s.kind = StrategyKind::kTileNms;
    s.stride = s.tile_size;
  } else if (name == "tile-overlap-nms") {
    s.kind = StrategyKind::kTileOverlapNms;
  } else if (name == "tile-overlap-tatm") {
    s.kind = StrategyKind::kTileOverlapTaTm;
  } else {
    throw ConfigError("unknown strategy '" + std::string(name) +
                      "' (expected full-<k>, tile-nms, tile-overlap-nms, tile-overlap-tatm)");
  }
  s.validate();
  return s;
}

std::vector<Strategy> default_strategies(const Config& cfg) {
  std::vector<Strategy> out;
  for (int k : cfg.input_full) out.push_back(parse_strategy("full-" + std::to_string(k), cfg));
  for (const char* n : {"tile-nms", "tile-overlap-nms", "tile-overlap-tatm"}) {
    out.push_back(parse_strategy(n, cfg));
  }
  return out;
}

std::vector<WorkUnit> plan_work(const AnnotatedImage& image, const Strategy& strategy,
                                const std::string& image_root) {
  if (image.width <= 0 || image.height <= 0) {
    throw GeometryError("image " + image.image_id + " has non-positive dimensions");
  }
  const std::string path =
      image_root.empty() ? image.file_name : (std::filesystem::path(image_root) / image.file_name).string();
  std::vector<WorkUnit> units;
  if (!strategy.tiled()) {
    WorkUnit u;
    u.unit_id = image.image_id + ":full" + std::to_string(strategy.input_size);
    u.image_id = image.image_id;
    u.image_path = path;
    u.strategy = strategy.name();
    u.width = image.width;
    u.height = image.height;
    u.target_input = strategy.input_size;
    u.scale = static_cast<double>(strategy.input_size) / std::max(image.width, image.height);
    units.push_back(std::move(u));
    return units;
  }
  const TileGrid grid = plan_grid(image.width, image.height, strategy.tile_size, strategy.stride);
  units.reserve(grid.tiles.size());
  for (const auto& t : grid.tiles) {
    WorkUnit u;
    u.unit_id = image.image_id + ":r" + std::to_string(t.row) + "c" + std::to_string(t.col);
    u.image_id = image.image_id;
    u.image_path = path;
    u.strategy = strategy.name();
    u.x0 = t.x0;
    u.y0 = t.y0;
    u.width = t.width;
    u.height = t.height;
    u.target_input = strategy.tile_size;
    u.tile = t;
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<Detection> remap_unit_result(const WorkUnit& unit, const UnitResult& result) {
  if (result.error) throw BackendError(unit.unit_id + ": " + *result.error);
  if (result.unit_id != unit.unit_id) {
    throw BackendError("response for '" + result.unit_id + "' where '" + unit.unit_id + "' was expected");
  }
  std::vector<Detection> out;
  out.reserve(result.detections.size());
  for (const auto& raw : result.detections) {
    if (raw.class_id < 0) throw BackendError(unit.unit_id + ": negative class_id");
    if (!(raw.score >= 0.0 && raw.score <= 1.0)) throw BackendError(unit.unit_id + ": score outside [0,1]");
    Box local = raw.box;
    if (result.input_scale) local = rescale_box(local, 1.0 / (*result.input_scale)[0], 1.0 / (*result.input_scale)[1]);
    local = clip_to_region(local, unit.width, unit.height, unit.unit_id);
    if (!(local.area() > 0.0)) continue;  // nothing left inside the region
    Detection d;
    d.class_id = raw.class_id;
    d.score = raw.score;
    if (unit.tile) {
      d.tile = unit.tile->index();
      d.box_tile = local;
      d.box_global = remap_to_global(local, unit.origin());
    } else {
      d.box_global = remap_to_global(local, unit.origin());
    }
    out.push_back(d);
  }
  return out;
}

ImageRun collect_image(const AnnotatedImage& image, const Strategy& strategy, DetectorBackend& backend,
                       const std::string& image_root, bool record_timing) {
  const auto t0 = Clock::now();
  ImageRun run;
  run.image_id = image.image_id;
  const std::vector<WorkUnit> units = plan_work(image, strategy, image_root);
  if (strategy.tiled()) run.grid = plan_grid(image.width, image.height, strategy.tile_size, strategy.stride);
  const double tiling_ms = ms_since(t0);

  const auto t1 = Clock::now();
  const std::vector<UnitResult> results = backend.detect(image, units);
  run.backend_calls = units.size();
  if (results.size() != units.size()) {
    throw BackendError(image.image_id + ": backend returned " + std::to_string(results.size()) +
                       " results for " + std::to_string(units.size()) + " work units");
  }
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto dets = remap_unit_result(units[i], results[i]);
    run.raw.insert(run.raw.end(), dets.begin(), dets.end());
  }
  const double detection_ms = ms_since(t1);
  if (record_timing) run.timing = ImageTiming{tiling_ms, detection_ms, 0.0, ms_since(t0)};
  return run;
}

void merge_image(ImageRun& run, const Strategy& strategy, bool record_timing) {
  const auto t0 = Clock::now();
  run.boosted = 0;
  run.boundary_sensitive = 0;
  switch (strategy.kind) {
    case StrategyKind::kFull:
      run.detections = plain_merge(run.raw, nullptr, strategy.merge);
      break;
    case StrategyKind::kTileNms:
    case StrategyKind::kTileOverlapNms:
      run.detections = plain_merge(run.raw, &run.grid.value(), strategy.merge);
      break;
    case StrategyKind::kTileOverlapTaTm: {
      TaTmResult r = ta_tm_merge(run.raw, run.grid.value(), strategy.merge, strategy.filter_after_adjust);
      run.detections = std::move(r.detections);
      run.boosted = r.boosted;
      run.boundary_sensitive = r.boundary_sensitive;
      break;
    }
  }
  if (record_timing) {
    const double merge_ms = ms_since(t0);
    if (!run.timing) run.timing = ImageTiming{};
    run.timing->merge_ms = merge_ms;
    run.timing->total_ms += merge_ms;
  }
}

std::vector<std::string> RunManifest::failed_images() const {
  std::vector<std::string> out;
  for (const auto& e : images) {
    if (e.failure) out.push_back(e.image_id);
  }
  return out;
}

std::size_t RunManifest::backend_calls() const noexcept {
  std::size_t n = 0;
  for (const auto& e : images) n += e.backend_calls;
  return n;
}

std::optional<double> RunManifest::mean_ms_per_image() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : images) {
    if (e.failure) continue;
    if (!e.timing) return std::nullopt;
    sum += e.timing->total_ms;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

PredictionsByImage RunResult::predictions() const {
  PredictionsByImage out;
  for (const auto& img : images) {
    if (img.failure) continue;
    auto& v = out[img.image_id];
    for (const auto& d : img.detections) v.push_back({d.class_id, d.confidence(), d.box_global});
  }
  return out;
}

std::vector<DetectionRecord> RunResult::records(const ClassMap& classes) const {
  std::vector<DetectionRecord> out;
  for (const auto& img : images) {
    if (img.failure) continue;
    for (const auto& d : img.detections) {
      const TileSpec* spec = (d.tile && img.grid) ? img.grid->find(*d.tile) : nullptr;
      out.push_back(to_record(d, img.image_id, strategy.name(), spec, classes));
    }
  }
  return out;
}

namespace {

std::vector<ImageRun> collect_all(const Dataset& ds, const Strategy& strategy, DetectorBackend& backend,
                                  const RunOptions& opts) {
  std::vector<ImageRun> runs(ds.images.size());
  parallel_for(ds.images.size(), opts.jobs, [&](std::size_t i) {
    const AnnotatedImage& img = ds.images[i];
    try {
      runs[i] = collect_image(img, strategy, backend, ds.image_root, opts.record_timing);
    } catch (const Error& e) {
      runs[i] = ImageRun{};
      runs[i].image_id = img.image_id;
      runs[i].failure = e.what();
    }
  });
  return runs;
}

void merge_all(std::vector<ImageRun>& runs, const Strategy& strategy, const RunOptions& opts) {
  parallel_for(runs.size(), opts.jobs, [&](std::size_t i) {
    if (runs[i].failure) return;
    try {
      merge_image(runs[i], strategy, opts.record_timing);
    } catch (const Error& e) {
      runs[i].detections.clear();
      runs[i].failure = e.what();
    }
  });
}

RunManifest make_manifest(const Dataset& ds, const Strategy& strategy, const DetectorBackend& backend,
                          const Config& cfg, const std::vector<ImageRun>& runs) {
  RunManifest m;
  m.dataset_id = ds.id;
  m.strategy = strategy.name();
  m.params_hash = cfg.params_hash();
  m.backend_id = backend.id();
  m.effective_config = cfg.canonical();
  for (const auto& r : runs) {
    m.images.push_back({r.image_id, r.backend_calls, r.detections.size(), r.boosted, r.timing, r.failure});
  }
  return m;
}

}  // namespace

RunResult run_strategy(const Dataset& ds, const Strategy& strategy, DetectorBackend& backend,
                       const Config& cfg, const RunOptions& opts) {
  strategy.validate();
  RunResult result;
  result.strategy = strategy;
  result.images = collect_all(ds, strategy, backend, opts);
  merge_all(result.images, strategy, opts);
  result.manifest = make_manifest(ds, strategy, backend, cfg, result.images);
  return result;
}

Dataset evaluable_subset(const Dataset& ds, const RunManifest& manifest) {
  const auto failed = manifest.failed_images();
  if (failed.empty()) return ds;
  Dataset out = ds;
  std::erase_if(out.images, [&](const AnnotatedImage& img) {
    return std::find(failed.begin(), failed.end(), img.image_id) != failed.end();
  });
  return out;
}

EvalReport evaluate_run(const Dataset& ds, const RunResult& run, const EvalOptions& opts) {
  EvalReport report = evaluate(evaluable_subset(ds, run.manifest), run.predictions(), opts);
  report.mean_ms_per_image = run.manifest.mean_ms_per_image();
  return report;
}

EvalOptions eval_options(const Config& cfg) {
  EvalOptions o;
  o.conf_threshold = cfg.conf;
  o.reference_tile = cfg.tile_size;
  if (std::find(cfg.input_full.begin(), cfg.input_full.end(), 640) == cfg.input_full.end() &&
      !cfg.input_full.empty()) {
    o.input_size = cfg.input_full.front();
  }
  return o;
}

Comparison compare_strategies(const Dataset& ds, std::span<const Strategy> strategies,
                              DetectorBackend& backend, const Config& cfg, const RunOptions& opts) {
  Comparison c;
  c.dataset_id = ds.id;
  const EvalOptions eo = eval_options(cfg);
  for (const auto& s : strategies) {
    RunResult run = run_strategy(ds, s, backend, cfg, opts);
    c.rows.push_back({s, evaluate_run(ds, run, eo), std::move(run.manifest)});
  }
  return c;
}

std::vector<TaTmSetting> sweep_grid(std::span<const double> taus, std::span<const double> lambdas) {
  std::vector<TaTmSetting> out;
  for (double t : taus) {
    for (double l : lambdas) out.push_back({t, l});
  }
  return out;
}

Sweep sweep_tatm_params(const Dataset& ds, DetectorBackend& backend, const Config& cfg,
                        std::span<const TaTmSetting> settings, const RunOptions& opts) {
  const Strategy nms = parse_strategy("tile-overlap-nms", cfg);
  const std::vector<ImageRun> raw = collect_all(ds, nms, backend, opts);
  const EvalOptions eo = eval_options(cfg);

  auto score = [&](const Strategy& s, std::optional<double> tau, std::optional<double> lambda) {
    std::vector<ImageRun> runs = raw;
    merge_all(runs, s, opts);
    RunResult rr;
    rr.strategy = s;
    rr.images = std::move(runs);
    rr.manifest = make_manifest(ds, s, backend, cfg, rr.images);
    const EvalReport rep = evaluate_run(ds, rr, eo);
    SweepRow row;
    row.tau = tau;
    row.lambda = lambda;
    row.map50 = rep.map50;
    row.recall = rep.at_conf.recall;
    if (!rep.by_boundary.bins.empty()) row.boundary_recall = rep.by_boundary.bins.front().recall;
    std::size_t evaluated = 0;
    for (const auto& r : rr.images) {
      if (r.failure) continue;
      ++evaluated;
      row.boosted += r.boosted;
      row.boundary_sensitive += r.boundary_sensitive;
    }
    if (evaluated > 0) row.boosted_per_image = static_cast<double>(row.boosted) / static_cast<double>(evaluated);
    return row;
  };

  Sweep sw;
  sw.dataset_id = ds.id;
  sw.rows.push_back(score(nms, std::nullopt, std::nullopt));
  for (const auto& setting : settings) {
    Strategy s = parse_strategy("tile-overlap-tatm", cfg);
    s.merge.tau = setting.tau;
    s.merge.lambda = setting.lambda;
    s.validate();
    sw.rows.push_back(score(s, setting.tau, setting.lambda));
  }
  return sw;
}

std::unique_ptr<DetectorBackend> make_backend(const BackendConfig& cfg) {
  if (cfg.kind == "precomputed") {
    if (cfg.dir.empty()) throw ConfigError("backend.dir is required for the precomputed backend");
    return std::make_unique<PrecomputedBackend>(cfg.dir);
  }
  if (cfg.kind == "subprocess") {
    if (cfg.cmd.empty()) throw ConfigError("backend.cmd is required for the subprocess backend");
    return std::make_unique<SubprocessBackend>(cfg.cmd);
  }
  if (cfg.kind == "sim") {
    SimDetectorParams p;
    if (!cfg.sim.empty()) p = load_sim_params(cfg.sim);
    return std::make_unique<SimulatedBackend>(p);
  }
  throw ConfigError("unknown backend.kind '" + cfg.kind + "'");
}

}  // namespace tatm

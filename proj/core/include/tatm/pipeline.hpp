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

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tatm/backend.hpp"
#include "tatm/config.hpp"
#include "tatm/dataset.hpp"
#include "tatm/evaluation.hpp"
#include "tatm/formats.hpp"
#include "tatm/merging.hpp"
#include "tatm/tiling.hpp"

namespace tatm {

enum class StrategyKind { kFull, kTileNms, kTileOverlapNms, kTileOverlapTaTm };

struct Strategy {
  StrategyKind kind = StrategyKind::kTileOverlapTaTm;
  int input_size = 640;  ///< Full-k only
  int tile_size = 640;
  int stride = 512;
  MergeParams merge;
  bool filter_after_adjust = false;

  bool tiled() const noexcept { return kind != StrategyKind::kFull; }
  /// CLI name: full-640, full-1280, tile-nms, tile-overlap-nms, tile-overlap-tatm.
  std::string name() const;
  /// Table label, e.g. "Tile-640 + Overlap + TA-TM".
  std::string label() const;
  void validate() const;
};

/// Builds a strategy from its CLI name, taking tile/stride/merge settings from
/// `cfg`. tile-nms always uses stride = tile_size.
Strategy parse_strategy(std::string_view name, const Config& cfg);
/// Full-k for each cfg.input_full entry, then the three tiled strategies.
std::vector<Strategy> default_strategies(const Config& cfg);

std::vector<WorkUnit> plan_work(const AnnotatedImage& image, const Strategy& strategy,
                                const std::string& image_root = {});

struct ImageTiming {
  double tiling_ms = 0.0;
  double detection_ms = 0.0;
  double merge_ms = 0.0;
  double total_ms = 0.0;
};

struct ImageRun {
  std::string image_id;
  std::optional<TileGrid> grid;
  std::vector<Detection> raw;         ///< remapped backend output, before filtering
  std::vector<Detection> detections;  ///< merged output
  std::size_t backend_calls = 0;
  std::size_t boosted = 0;
  std::size_t boundary_sensitive = 0;
  std::optional<ImageTiming> timing;
  std::optional<std::string> failure;
};

struct RunOptions {
  unsigned jobs = 0;  ///< 0: hardware concurrency
  bool record_timing = true;
};

struct RunManifest {
  std::string dataset_id;
  std::string strategy;
  std::string params_hash;
  std::string backend_id;
  std::string effective_config;  ///< Config::canonical()
  struct Entry {
    std::string image_id;
    std::size_t backend_calls = 0;
    std::size_t detections = 0;
    std::size_t boosted = 0;
    std::optional<ImageTiming> timing;
    std::optional<std::string> failure;
  };
  std::vector<Entry> images;

  std::vector<std::string> failed_images() const;
  std::size_t backend_calls() const noexcept;
  std::optional<double> mean_ms_per_image() const;
};

struct RunResult {
  Strategy strategy;
  RunManifest manifest;
  std::vector<ImageRun> images;  ///< dataset order

  PredictionsByImage predictions() const;
  std::vector<DetectionRecord> records(const ClassMap& classes) const;
};

/// Remaps one unit's backend output to global coordinates. Tile-local boxes
/// may overshoot the region by kTileSlopPx and are clipped; further out is a
/// BackendError.
std::vector<Detection> remap_unit_result(const WorkUnit& unit, const UnitResult& result);

/// Plans, calls the backend and remaps, without merging.
ImageRun collect_image(const AnnotatedImage& image, const Strategy& strategy,
                       DetectorBackend& backend, const std::string& image_root = {},
                       bool record_timing = true);
/// Merges `run.raw` according to `strategy`, replacing detections and counts.
void merge_image(ImageRun& run, const Strategy& strategy, bool record_timing = true);

RunResult run_strategy(const Dataset& ds, const Strategy& strategy, DetectorBackend& backend,
                       const Config& cfg, const RunOptions& opts = {});

/// Ground truth restricted to images that did not fail.
Dataset evaluable_subset(const Dataset& ds, const RunManifest& manifest);
EvalReport evaluate_run(const Dataset& ds, const RunResult& run, const EvalOptions& opts);

EvalOptions eval_options(const Config& cfg);

struct ComparisonRow {
  Strategy strategy;
  EvalReport report;
  RunManifest manifest;
};

struct Comparison {
  std::string dataset_id;
  std::vector<ComparisonRow> rows;
};

Comparison compare_strategies(const Dataset& ds, std::span<const Strategy> strategies,
                              DetectorBackend& backend, const Config& cfg,
                              const RunOptions& opts = {});

struct SweepRow {
  std::optional<double> tau;  ///< absent on the overlap-NMS baseline row
  std::optional<double> lambda;
  std::optional<double> map50;
  double recall = 0.0;
  std::optional<double> boundary_recall;  ///< recall in the first boundary bin
  std::size_t boosted = 0;  ///< test-set total
  double boosted_per_image = 0.0;
  std::size_t boundary_sensitive = 0;
};

struct Sweep {
  std::string dataset_id;
  std::vector<SweepRow> rows;  ///< baseline first, then one per setting
};

struct TaTmSetting {
  double tau = 16.0;
  double lambda = 0.2;
};

/// Every (tau, lambda) combination, tau-major.
std::vector<TaTmSetting> sweep_grid(std::span<const double> taus, std::span<const double> lambdas);

/// One raw detection pass with the overlap grid, re-merged for every setting.
/// The first row is the overlap-NMS baseline.
Sweep sweep_tatm_params(const Dataset& ds, DetectorBackend& backend, const Config& cfg,
                        std::span<const TaTmSetting> settings, const RunOptions& opts = {});

/// precomputed | subprocess | sim
std::unique_ptr<DetectorBackend> make_backend(const BackendConfig& cfg);

}  // namespace tatm

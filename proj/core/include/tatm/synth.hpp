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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tatm/backend.hpp"
#include "tatm/dataset.hpp"
#include "tatm/geometry.hpp"

namespace tatm {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class PlacementKind { kUniform, kBoundary };

/// `count` defects per image. Boundary placement puts the centre at distance
/// delta in [delta_min, delta_max) from an interior reference line (a
/// multiple of reference_tile) on the chosen axis.
struct PlacementGroup {
  int count = 0;
  int class_id = 0;
  int size_min = 16;  ///< side length, px
  int size_max = 32;
  PlacementKind placement = PlacementKind::kUniform;
  double delta_min = 0.0;
  double delta_max = 16.0;
  char axis = 'a';  ///< 'x', 'y' or 'a' (either)
};

struct ExplicitPlacement {
  int image = 0;
  int class_id = 0;
  Box box;
};

struct ScenarioSpec {
  std::string id = "synthetic";
  std::uint64_t seed = 42;
  std::vector<std::string> classes{"defect"};
  int image_count = 1;
  int width = 2560;
  int height = 2560;
  int reference_tile = 640;
  int min_gap = 2;  ///< minimum spacing between placed defects
  std::vector<PlacementGroup> groups;
  std::vector<ExplicitPlacement> placements;

  void validate() const;
};

ScenarioSpec parse_scenario(std::string_view json_text, const std::string& source = "scenario");
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Deterministic boards. Image i draws from splitmix64(seed ^ i), so the
/// content of an image does not depend on how many others are generated.
Dataset generate_scenario(const ScenarioSpec& spec);

struct CurvePoint {
  double visible = 0.0;
  double multiplier = 0.0;
};

struct SimDetectorParams {
  std::vector<double> base_confidence{0.9};  ///< per class; the last entry covers higher ids
  std::vector<CurvePoint> curve{{0.0, 0.0}, {1.0, 1.0}};
  double min_visible_fraction = 0.1;
  double min_apparent_area = 0.0;  ///< px² in the detector's input frame
  double fp_rate = 0.0;            ///< mean false positives per work unit
  double fp_score_min = 0.3;
  double fp_score_max = 0.6;
  int fp_size_min = 8;
  int fp_size_max = 48;
  int num_classes = 1;  ///< false positives draw their class from [0, num_classes)
  double jitter = 0.0;  ///< uniform +/- px on each coordinate
  std::uint64_t seed = 42;

  /// Piecewise-linear, clamped to the end points.
  double curve_at(double visible) const noexcept;
  double base_for(int class_id) const noexcept;
  void validate() const;
};

SimDetectorParams parse_sim_params(std::string_view json_text, const std::string& source = "sim");
SimDetectorParams load_sim_params(const std::filesystem::path& path);
std::string sim_params_json(const SimDetectorParams& p);

/// Tile units get tile-local boxes. Whole-image units get boxes in the resized
/// input frame with input_scale set.
UnitResult simulate_detector(const WorkUnit& unit, const AnnotatedImage& image,
                             const SimDetectorParams& params);

class SimulatedBackend final : public DetectorBackend {
 public:
  explicit SimulatedBackend(SimDetectorParams params);
  std::string id() const override;
  std::vector<UnitResult> detect(const AnnotatedImage& image, std::span<const WorkUnit> units) override;
  const SimDetectorParams& params() const noexcept { return params_; }

 private:
  SimDetectorParams params_;
};

}  // namespace tatm

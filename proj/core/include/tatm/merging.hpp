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
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tatm/geometry.hpp"
#include "tatm/tiling.hpp"

namespace tatm {

/// Subset of {left, top, right, bottom}.
class EdgeSet {
 public:
  constexpr EdgeSet() = default;
  constexpr void insert(Edge e) noexcept { bits_ |= bit(e); }
  constexpr bool contains(Edge e) const noexcept { return (bits_ & bit(e)) != 0; }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr std::uint8_t bits() const noexcept { return bits_; }
  friend constexpr bool operator==(EdgeSet, EdgeSet) = default;

 private:
  static constexpr std::uint8_t bit(Edge e) noexcept {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(e));
  }
  std::uint8_t bits_ = 0;
};

/// A scored, classed box. Tiled strategies fill the tile provenance and the
/// tile-local box; TA-TM fills the boundary and agreement fields.
struct Detection {
  int class_id = 0;
  double score = 0.0;  ///< original detector confidence
  Box box_global;
  std::optional<Box> box_tile;
  std::optional<TileIndex> tile;
  std::optional<double> boundary_distance;
  EdgeSet near_edges;
  std::optional<double> agreement;
  std::optional<double> adjusted_score;

  /// The confidence reported downstream: adjusted when TA-TM ran.
  double confidence() const noexcept { return adjusted_score.value_or(score); }
  bool boosted() const noexcept { return adjusted_score && *adjusted_score > score; }
};

struct MergeParams {
  double conf_threshold = 0.25;
  double nms_iou = 0.45;
  double tau = 16.0;     ///< boundary-sensitivity distance, px
  double lambda = 0.2;   ///< agreement weight
  double mu = 0.0;       ///< edge-continuity weight; only 0 is supported

  /// Throws ConfigError on out-of-range values or a non-zero mu.
  void validate() const;
};

enum class ScoreField { kOriginal, kAdjusted };

/// Per-class greedy NMS over global boxes. Ranking: score desc, area desc,
/// then box coordinates, then input order. A later detection is suppressed
/// when IoU with a kept one is strictly greater than `iou_thresh`. Output is
/// in rank order across classes.
std::vector<Detection> class_aware_nms(std::span<const Detection> dets, double iou_thresh,
                                       ScoreField field = ScoreField::kOriginal);

/// Strict-weak ordering used for NMS ranking and canonical output order.
bool ranks_before(const Detection& a, const Detection& b, ScoreField field) noexcept;

/// Fills boundary_distance and near_edges. Requires box_tile.
Detection mark_boundary_sensitivity(Detection det, TileDims tile, double tau);

inline bool is_boundary_sensitive(const Detection& d, double tau) noexcept {
  return d.boundary_distance && *d.boundary_distance < tau;
}

/// Detections of one image grouped by tile, plus lookup helpers.
class TileDetectionIndex {
 public:
  TileDetectionIndex(std::span<const Detection> dets);
  std::span<const std::size_t> in_tile(TileIndex idx) const noexcept;
  const Detection& at(std::size_t i) const noexcept { return dets_[i]; }

 private:
  std::span<const Detection> dets_;
  std::vector<TileIndex> keys_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Agreement score A for a boundary-sensitive detection: the maximum original
/// score over same-class detections in the 4-neighbour tile across each near
/// edge that (a) overlap the detection along the axis parallel to the shared
/// edge and (b) intersect, or lie closer than tau to, the detection's tile
/// edge line in global coordinates. 0 when nothing qualifies.
double adjacent_agreement(const Detection& det, const TileGrid& grid, const AdjacencyGraph& graph,
                          const TileDetectionIndex& index, double tau);

/// min(1, s + lambda * A).
double adjust_score(double score, double agreement, double lambda) noexcept;

struct TaTmResult {
  std::vector<Detection> detections;  ///< final set, confidence() is the adjusted score
  std::size_t boosted = 0;            ///< detections with s' > s before NMS
  std::size_t boundary_sensitive = 0;
};

/// Detections must carry tile provenance and tile-local boxes. box_global is
/// recomputed from the tile origin. Detections below conf_threshold are
/// dropped first, unless `filter_after_adjust` is set, in which case the
/// threshold applies to the adjusted score.
TaTmResult ta_tm_merge(std::span<const Detection> dets, const TileGrid& grid,
                       const MergeParams& params, bool filter_after_adjust = false);

/// Remap (when tile provenance is present) then class-aware NMS on original scores.
std::vector<Detection> plain_merge(std::span<const Detection> dets, const TileGrid* grid,
                                   const MergeParams& params);

}  // namespace tatm

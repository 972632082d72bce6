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

#include "tatm/merging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tatm/error.hpp"

namespace tatm {

void MergeParams::validate() const {
  if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
    throw ConfigError("conf must lie in [0, 1]");
  }
  if (!(nms_iou > 0.0 && nms_iou < 1.0)) throw ConfigError("nms_iou must lie in (0, 1)");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (mu != 0.0) throw ConfigError("mu: edge-continuity term is not implemented (only 0 is accepted)");
}

namespace {

double ranking_score(const Detection& d, ScoreField field) noexcept {
  return field == ScoreField::kAdjusted ? d.confidence() : d.score;
}

}  // namespace

bool ranks_before(const Detection& a, const Detection& b, ScoreField field) noexcept {
  const double sa = ranking_score(a, field);
  const double sb = ranking_score(b, field);
  if (sa != sb) return sa > sb;
  const double aa = a.box_global.area();
  const double ab = b.box_global.area();
  if (aa != ab) return aa > ab;
  const auto& p = a.box_global;
  const auto& q = b.box_global;
  if (p.x1 != q.x1) return p.x1 < q.x1;
  if (p.y1 != q.y1) return p.y1 < q.y1;
  if (p.x2 != q.x2) return p.x2 < q.x2;
  if (p.y2 != q.y2) return p.y2 < q.y2;
  return a.class_id < b.class_id;
}

std::vector<Detection> class_aware_nms(std::span<const Detection> dets, double iou_thresh,
                                       ScoreField field) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return ranks_before(dets[i], dets[j], field);
  });

  std::map<int, std::vector<Box>> kept_by_class;
  std::vector<Detection> out;
  for (std::size_t i : order) {
    const Detection& d = dets[i];
    auto& kept = kept_by_class[d.class_id];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Box& k) {
      return iou(k, d.box_global) > iou_thresh;
    });
    if (suppressed) continue;
    kept.push_back(d.box_global);
    out.push_back(d);
  }
  return out;
}

Detection mark_boundary_sensitivity(Detection det, TileDims tile, double tau) {
  if (!det.box_tile) throw GeometryError("boundary sensitivity needs a tile-local box");
  const BoundaryDistance bd = boundary_distance(*det.box_tile, tile);
  det.boundary_distance = bd.distance;
  det.near_edges = {};
  if (bd.left < tau) det.near_edges.insert(Edge::kLeft);
  if (bd.top < tau) det.near_edges.insert(Edge::kTop);
  if (bd.right < tau) det.near_edges.insert(Edge::kRight);
  if (bd.bottom < tau) det.near_edges.insert(Edge::kBottom);
  return det;
}

TileDetectionIndex::TileDetectionIndex(std::span<const Detection> dets) : dets_(dets) {
  std::map<TileIndex, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].tile) groups[*dets[i].tile].push_back(i);
  }
  for (auto& [k, v] : groups) {
    keys_.push_back(k);
    members_.push_back(std::move(v));
  }
}

std::span<const std::size_t> TileDetectionIndex::in_tile(TileIndex idx) const noexcept {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), idx);
  if (it == keys_.end() || *it != idx) return {};
  return members_[static_cast<std::size_t>(it - keys_.begin())];
}

double adjacent_agreement(const Detection& det, const TileGrid& grid, const AdjacencyGraph& graph,
                          const TileDetectionIndex& index, double tau) {
  if (!det.tile) return 0.0;
  const TileSpec* own = grid.find(*det.tile);
  if (own == nullptr) return 0.0;
  const Box& b = det.box_global;
  double best = 0.0;

  for (Edge e : kAllEdges) {
    if (!det.near_edges.contains(e)) continue;
    const auto nb = graph.neighbour(*det.tile, e);
    if (!nb) continue;

    const bool vertical_line = e == Edge::kLeft || e == Edge::kRight;
    double line = 0.0;
    switch (e) {
      case Edge::kLeft:
        line = own->x0;
        break;
      case Edge::kRight:
        line = own->x0 + own->width;
        break;
      case Edge::kTop:
        line = own->y0;
        break;
      case Edge::kBottom:
        line = own->y0 + own->height;
        break;
    }

    for (std::size_t i : index.in_tile(*nb)) {
      const Detection& c = index.at(i);
      if (c.class_id != det.class_id) continue;
      const Box& q = c.box_global;
      // Spatial alignment along the shared edge.
      const double overlap = vertical_line ? std::min(b.y2, q.y2) - std::max(b.y1, q.y1)
                                           : std::min(b.x2, q.x2) - std::max(b.x1, q.x1);
      if (!(overlap > 0.0)) continue;
      // Proximity to the edge line.
      const double lo = vertical_line ? q.x1 : q.y1;
      const double hi = vertical_line ? q.x2 : q.y2;
      const bool crosses = lo <= line && line <= hi;
      const double gap = crosses ? 0.0 : std::min(std::abs(lo - line), std::abs(hi - line));
      if (!crosses && !(gap < tau)) continue;
      best = std::max(best, c.score);
    }
  }
  return best;
}

double adjust_score(double score, double agreement, double lambda) noexcept {
  return std::min(1.0, score + lambda * agreement);
}

TaTmResult ta_tm_merge(std::span<const Detection> dets, const TileGrid& grid,
                       const MergeParams& params, bool filter_after_adjust) {
  params.validate();
  std::vector<Detection> work;
  work.reserve(dets.size());
  for (const auto& d : dets) {
    if (!d.tile || !d.box_tile) {
      throw Error("TA-TM requires tile provenance on every detection");
    }
    if (!filter_after_adjust && d.score < params.conf_threshold) continue;
    const TileSpec* t = grid.find(*d.tile);
    if (t == nullptr) {
      throw Error("detection references tile (" + std::to_string(d.tile->row) + ", " +
                  std::to_string(d.tile->col) + ") which is not in the grid");
    }
    Detection m = mark_boundary_sensitivity(d, t->dims(), params.tau);
    m.box_global = remap_to_global(*m.box_tile, t->origin());
    m.agreement.reset();
    m.adjusted_score.reset();
    work.push_back(std::move(m));
  }

  const AdjacencyGraph graph = build_adjacency(grid);
  // Agreement reads original scores from this frozen snapshot.
  const TileDetectionIndex index(work);
  std::vector<double> adjusted(work.size());
  std::vector<std::optional<double>> agreement(work.size());
  TaTmResult result;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const Detection& d = work[i];
    if (is_boundary_sensitive(d, params.tau)) {
      ++result.boundary_sensitive;
      const double a = adjacent_agreement(d, grid, graph, index, params.tau);
      agreement[i] = a;
      adjusted[i] = adjust_score(d.score, a, params.lambda);
    } else {
      adjusted[i] = d.score;
    }
  }
  for (std::size_t i = 0; i < work.size(); ++i) {
    work[i].agreement = agreement[i];
    work[i].adjusted_score = adjusted[i];
    if (work[i].boosted()) ++result.boosted;
  }

  if (filter_after_adjust) {
    std::erase_if(work, [&](const Detection& d) { return d.confidence() < params.conf_threshold; });
  }
  result.detections = class_aware_nms(work, params.nms_iou, ScoreField::kAdjusted);
  return result;
}

std::vector<Detection> plain_merge(std::span<const Detection> dets, const TileGrid* grid,
                                   const MergeParams& params) {
  params.validate();
  std::vector<Detection> work;
  work.reserve(dets.size());
  for (const auto& d : dets) {
    if (d.score < params.conf_threshold) continue;
    Detection m = d;
    if (grid != nullptr && m.tile && m.box_tile) {
      const TileSpec* t = grid->find(*m.tile);
      if (t == nullptr) throw Error("detection references a tile outside the grid");
      m.box_global = remap_to_global(*m.box_tile, t->origin());
    }
    work.push_back(std::move(m));
  }
  return class_aware_nms(work, params.nms_iou, ScoreField::kOriginal);
}

}  // namespace tatm

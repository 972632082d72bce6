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

#include "tatm/tiling.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "tatm/error.hpp"

namespace tatm {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Edge e) noexcept {
  switch (e) {
    case Edge::kLeft:
      return "left";
    case Edge::kTop:
      return "top";
    case Edge::kRight:
      return "right";
    case Edge::kBottom:
      return "bottom";
  }
  return "?";
}

const TileSpec* TileGrid::find(TileIndex idx) const noexcept {
  if (idx.row < 0 || idx.col < 0 || idx.row >= rows || idx.col >= cols) return nullptr;
  const auto pos = static_cast<std::size_t>(idx.row) * static_cast<std::size_t>(cols) +
                   static_cast<std::size_t>(idx.col);
  if (pos < tiles.size() && tiles[pos].index() == idx) return &tiles[pos];
  for (const auto& t : tiles) {
    if (t.index() == idx) return &t;
  }
  return nullptr;
}

AdjacencyGraph::AdjacencyGraph(std::vector<TileIndex> nodes, std::vector<AdjacencyEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
}

bool AdjacencyGraph::contains(TileIndex idx) const noexcept {
  return std::binary_search(nodes_.begin(), nodes_.end(), idx);
}

bool AdjacencyGraph::adjacent(TileIndex a, TileIndex b) const noexcept {
  return contains(a) && contains(b) && std::abs(a.row - b.row) + std::abs(a.col - b.col) == 1;
}

std::optional<TileIndex> AdjacencyGraph::neighbour(TileIndex idx, Edge edge) const noexcept {
  TileIndex n = idx;
  switch (edge) {
    case Edge::kLeft:
      --n.col;
      break;
    case Edge::kRight:
      ++n.col;
      break;
    case Edge::kTop:
      --n.row;
      break;
    case Edge::kBottom:
      ++n.row;
      break;
  }
  if (!adjacent(idx, n)) return std::nullopt;
  return n;
}

std::vector<int> axis_origins(int dim, int tile_size, int stride) {
  if (dim <= 0) throw ConfigError("image dimension must be positive");
  if (tile_size <= 0) throw ConfigError("tile_size must be positive");
  if (stride <= 0) throw ConfigError("stride must be positive");
  if (stride > tile_size) throw ConfigError("stride must not exceed tile_size (tiles would leave gaps)");
  const int last = std::max(0, dim - tile_size);
  std::vector<int> origins;
  for (long long o = 0; o < last; o += stride) origins.push_back(static_cast<int>(o));
  if (origins.empty() || origins.back() != last) origins.push_back(last);
  return origins;
}

TileGrid plan_grid(int image_w, int image_h, int tile_size, int stride) {
  const auto xs = axis_origins(image_w, tile_size, stride);
  const auto ys = axis_origins(image_h, tile_size, stride);
  TileGrid g;
  g.image_w = image_w;
  g.image_h = image_h;
  g.tile_size = tile_size;
  g.stride = stride;
  g.rows = static_cast<int>(ys.size());
  g.cols = static_cast<int>(xs.size());
  const int tw = std::min(tile_size, image_w);
  const int th = std::min(tile_size, image_h);
  g.tiles.reserve(xs.size() * ys.size());
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      g.tiles.push_back({r, c, xs[static_cast<std::size_t>(c)], ys[static_cast<std::size_t>(r)], tw, th});
    }
  }
  return g;
}

AdjacencyGraph build_adjacency(std::vector<TileIndex> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<AdjacencyEdge> edges;
  for (const auto& n : nodes) {
    const TileIndex right{n.row, n.col + 1};
    const TileIndex below{n.row + 1, n.col};
    if (std::binary_search(nodes.begin(), nodes.end(), right)) {
      edges.push_back({n, right, SharedEdge::kVertical});
    }
    if (std::binary_search(nodes.begin(), nodes.end(), below)) {
      edges.push_back({n, below, SharedEdge::kHorizontal});
    }
  }
  return AdjacencyGraph(std::move(nodes), std::move(edges));
}

AdjacencyGraph build_adjacency(const TileGrid& grid) {
  std::vector<TileIndex> nodes;
  nodes.reserve(grid.tiles.size());
  for (const auto& t : grid.tiles) nodes.push_back(t.index());
  return build_adjacency(std::move(nodes));
}

BoundaryLines interior_boundary_lines(const TileGrid& grid) {
  BoundaryLines lines;
  for (const auto& t : grid.tiles) {
    for (int x : {t.x0, t.x0 + t.width}) {
      if (x > 0 && x < grid.image_w) lines.xs.push_back(x);
    }
    for (int y : {t.y0, t.y0 + t.height}) {
      if (y > 0 && y < grid.image_h) lines.ys.push_back(y);
    }
  }
  for (auto* v : {&lines.xs, &lines.ys}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return lines;
}

namespace {

double nearest_line(double v, const std::vector<double>& lines) {
  if (lines.empty()) return kNoInteriorBoundary;
  auto it = std::lower_bound(lines.begin(), lines.end(), v);
  double best = kNoInteriorBoundary;
  if (it != lines.end()) best = std::min(best, std::abs(*it - v));
  if (it != lines.begin()) best = std::min(best, std::abs(*std::prev(it) - v));
  return best;
}

}  // namespace

double nearest_grid_boundary_distance(Point p, const BoundaryLines& lines) {
  return std::min(nearest_line(p.x, lines.xs), nearest_line(p.y, lines.ys));
}

double nearest_grid_boundary_distance(Point p, const TileGrid& grid) {
  return nearest_grid_boundary_distance(p, interior_boundary_lines(grid));
}

std::string grid_manifest_json(const TileGrid& grid, std::string_view image_id) {
  ordered_json j;
  j["image_id"] = std::string(image_id);
  j["image_w"] = grid.image_w;
  j["image_h"] = grid.image_h;
  j["tile_size"] = grid.tile_size;
  j["stride"] = grid.stride;
  auto tiles = ordered_json::array();
  for (const auto& t : grid.tiles) {
    ordered_json o;
    o["row"] = t.row;
    o["col"] = t.col;
    o["x0"] = t.x0;
    o["y0"] = t.y0;
    o["w"] = t.width;
    o["h"] = t.height;
    tiles.push_back(std::move(o));
  }
  j["tiles"] = std::move(tiles);
  return j.dump(2) + "\n";
}

GridManifest parse_grid_manifest(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GridManifest m;
    m.image_id = j.at("image_id").get<std::string>();
    m.grid.image_w = j.at("image_w").get<int>();
    m.grid.image_h = j.at("image_h").get<int>();
    m.grid.tile_size = j.at("tile_size").get<int>();
    m.grid.stride = j.at("stride").get<int>();
    for (const auto& t : j.at("tiles")) {
      m.grid.tiles.push_back({t.at("row").get<int>(), t.at("col").get<int>(), t.at("x0").get<int>(),
                              t.at("y0").get<int>(), t.at("w").get<int>(), t.at("h").get<int>()});
      m.grid.rows = std::max(m.grid.rows, m.grid.tiles.back().row + 1);
      m.grid.cols = std::max(m.grid.cols, m.grid.tiles.back().col + 1);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("grid manifest: ") + e.what());
  }
}

}  // namespace tatm

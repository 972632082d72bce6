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

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tatm/geometry.hpp"

namespace tatm {

struct TileIndex {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const TileIndex&, const TileIndex&) = default;
};

/// One tile of a grid. Origins are integer pixels; the crop is
/// [x0, x0 + width) x [y0, y0 + height).
struct TileSpec {
  int row = 0;
  int col = 0;
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  TileIndex index() const noexcept { return {row, col}; }
  Point origin() const noexcept { return {static_cast<double>(x0), static_cast<double>(y0)}; }
  TileDims dims() const noexcept { return {width, height}; }
  Box rect() const noexcept {
    return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x0 + width),
            static_cast<double>(y0 + height)};
  }

  friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

/// Tiles of one image in row-major order.
struct TileGrid {
  int image_w = 0;
  int image_h = 0;
  int tile_size = 0;
  int stride = 0;
  int rows = 0;
  int cols = 0;
  std::vector<TileSpec> tiles;

  const TileSpec* find(TileIndex idx) const noexcept;
  friend bool operator==(const TileGrid&, const TileGrid&) = default;
};

enum class Edge : std::uint8_t { kLeft = 0, kTop = 1, kRight = 2, kBottom = 3 };

inline constexpr std::array<Edge, 4> kAllEdges{Edge::kLeft, Edge::kTop, Edge::kRight,
                                               Edge::kBottom};

std::string_view to_string(Edge e) noexcept;

/// Orientation of the boundary shared by two adjacent tiles.
enum class SharedEdge : std::uint8_t {
  kVertical,    ///< horizontal neighbours (same row)
  kHorizontal,  ///< vertical neighbours (same column)
};

struct AdjacencyEdge {
  TileIndex a;  ///< the lower of the two indices
  TileIndex b;
  SharedEdge shared = SharedEdge::kVertical;
  friend bool operator==(const AdjacencyEdge&, const AdjacencyEdge&) = default;
};

/// 4-connected graph over the (row, col) indices of a grid.
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;
  AdjacencyGraph(std::vector<TileIndex> nodes, std::vector<AdjacencyEdge> edges);

  const std::vector<TileIndex>& nodes() const noexcept { return nodes_; }
  const std::vector<AdjacencyEdge>& edges() const noexcept { return edges_; }

  bool contains(TileIndex idx) const noexcept;
  bool adjacent(TileIndex a, TileIndex b) const noexcept;

  /// The node across `edge` of `idx`, when it exists in the graph.
  std::optional<TileIndex> neighbour(TileIndex idx, Edge edge) const noexcept;

 private:
  std::vector<TileIndex> nodes_;  // sorted
  std::vector<AdjacencyEdge> edges_;
};

/// Tile origins along one axis: 0, stride, 2*stride, ... clamped to
/// max(0, dim - tile) with a final origin exactly there, duplicates removed.
std::vector<int> axis_origins(int dim, int tile_size, int stride);

TileGrid plan_grid(int image_w, int image_h, int tile_size, int stride);

AdjacencyGraph build_adjacency(const TileGrid& grid);

/// Adjacency over an arbitrary set of tile indices (used when only the tiles
/// that produced detections are known).
AdjacencyGraph build_adjacency(std::vector<TileIndex> nodes);

/// Interior tile-boundary lines of a grid: every tile edge except the image
/// borders, sorted and deduplicated.
struct BoundaryLines {
  std::vector<double> xs;
  std::vector<double> ys;
};
BoundaryLines interior_boundary_lines(const TileGrid& grid);

/// Distance from a global point to the nearest interior boundary line, or
/// +infinity when the grid has none.
double nearest_grid_boundary_distance(Point p, const TileGrid& grid);
double nearest_grid_boundary_distance(Point p, const BoundaryLines& lines);

inline constexpr double kNoInteriorBoundary = std::numeric_limits<double>::infinity();

/// Canonical JSON grid manifest:
/// {image_id, image_w, image_h, tile_size, stride, tiles:[{row,col,x0,y0,w,h}]}.
std::string grid_manifest_json(const TileGrid& grid, std::string_view image_id);

struct GridManifest {
  std::string image_id;
  TileGrid grid;
};
GridManifest parse_grid_manifest(std::string_view json);

}  // namespace tatm

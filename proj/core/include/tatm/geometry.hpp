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

#include <optional>

namespace tatm {

/// Axis-aligned rectangle in pixel coordinates. Coordinates are real-valued;
/// the frame (tile-local or global) is implied by where the box is stored.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x1 + x2); }
  double center_y() const noexcept { return 0.5 * (y1 + y2); }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct TileDims {
  int width = 0;
  int height = 0;
};

/// Distance from a tile-local box to each tile edge. `distance` is the
/// minimum of the four components.
struct BoundaryDistance {
  double distance = 0.0;
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;
};

struct ClipResult {
  std::optional<Box> clipped;
  double visible_fraction = 0.0;
};

/// Detector boxes may overshoot the tile by this much before they are treated
/// as corrupt.
inline constexpr double kTileSlopPx = 2.0;

/// Throws GeometryError unless x1 <= x2, y1 <= y2 and all coordinates are finite.
void validate(const Box& b);
bool is_valid(const Box& b) noexcept;

/// Intersection over union. Two degenerate boxes give 1 when identical and 0
/// otherwise.
double iou(const Box& a, const Box& b);

/// Intersection rectangle, or nullopt when the overlap has zero area.
std::optional<Box> intersection(const Box& a, const Box& b);

ClipResult clip_box(const Box& b, const Box& rect);

/// min(x1, y1, Wt - x2, Ht - y2) plus the per-edge components. Boxes that
/// overshoot the tile by at most kTileSlopPx are clipped first; anything
/// further out, or entirely outside, is a GeometryError.
BoundaryDistance boundary_distance(const Box& b, TileDims tile);

Box remap_to_global(const Box& b, Point tile_origin) noexcept;
Box remap_to_local(const Box& b, Point tile_origin) noexcept;

Box rescale_box(const Box& b, double scale);
Box rescale_box(const Box& b, double scale_x, double scale_y);

/// Area of `b` after the image is resized so its longest side is `input_size`.
double apparent_area(const Box& b, int image_w, int image_h, int input_size);

}  // namespace tatm

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

#include "tatm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tatm/error.hpp"

namespace tatm {

namespace {

std::string describe(const Box& b) {
  std::ostringstream os;
  os << "(" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ")";
  return os.str();
}

}  // namespace

bool is_valid(const Box& b) noexcept {
  return std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
         std::isfinite(b.y2) && b.x1 <= b.x2 && b.y1 <= b.y2;
}

void validate(const Box& b) {
  if (!is_valid(b)) throw GeometryError("malformed box " + describe(b));
}

std::optional<Box> intersection(const Box& a, const Box& b) {
  const Box r{std::max(a.x1, b.x1), std::max(a.y1, b.y1), std::min(a.x2, b.x2),
              std::min(a.y2, b.y2)};
  if (r.x2 <= r.x1 || r.y2 <= r.y1) return std::nullopt;
  return r;
}

double iou(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

ClipResult clip_box(const Box& b, const Box& rect) {
  validate(b);
  validate(rect);
  const double area = b.area();
  if (area <= 0.0) return {};
  auto clipped = intersection(b, rect);
  if (!clipped) return {};
  return {clipped, std::min(1.0, clipped->area() / area)};
}

BoundaryDistance boundary_distance(const Box& b, TileDims tile) {
  validate(b);
  if (tile.width <= 0 || tile.height <= 0) throw GeometryError("tile dimensions must be positive");
  const double w = tile.width;
  const double h = tile.height;
  if (b.x2 <= 0.0 || b.y2 <= 0.0 || b.x1 >= w || b.y1 >= h) {
    throw GeometryError("box " + describe(b) + " lies outside its tile");
  }
  if (b.x1 < -kTileSlopPx || b.y1 < -kTileSlopPx || b.x2 > w + kTileSlopPx ||
      b.y2 > h + kTileSlopPx) {
    throw GeometryError("box " + describe(b) + " overshoots its tile by more than " +
                        std::to_string(kTileSlopPx) + " px");
  }
  const Box c{std::max(b.x1, 0.0), std::max(b.y1, 0.0), std::min(b.x2, w), std::min(b.y2, h)};
  BoundaryDistance d;
  d.left = c.x1;
  d.top = c.y1;
  d.right = w - c.x2;
  d.bottom = h - c.y2;
  d.distance = std::min({d.left, d.top, d.right, d.bottom});
  return d;
}

Box remap_to_global(const Box& b, Point o) noexcept {
  return {b.x1 + o.x, b.y1 + o.y, b.x2 + o.x, b.y2 + o.y};
}

Box remap_to_local(const Box& b, Point o) noexcept {
  return {b.x1 - o.x, b.y1 - o.y, b.x2 - o.x, b.y2 - o.y};
}

Box rescale_box(const Box& b, double scale) { return rescale_box(b, scale, scale); }

Box rescale_box(const Box& b, double sx, double sy) {
  if (!(sx > 0.0) || !(sy > 0.0) || !std::isfinite(sx) || !std::isfinite(sy)) {
    throw GeometryError("scale must be positive and finite");
  }
  return {b.x1 * sx, b.y1 * sy, b.x2 * sx, b.y2 * sy};
}

double apparent_area(const Box& b, int image_w, int image_h, int input_size) {
  if (input_size <= 0) throw GeometryError("input size must be positive");
  if (image_w < 1 || image_h < 1) throw GeometryError("image dimensions must be >= 1");
  const double s = static_cast<double>(input_size) / std::max(image_w, image_h);
  return b.area() * s * s;
}

}  // namespace tatm

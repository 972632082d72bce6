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
#include <memory>

#include "tatm/dataset.hpp"
#include "tatm/tiling.hpp"

namespace tatm {

/// Optional pixel capability. The core never needs it; slicing and synthetic
/// generation fall back to label-only output when it is absent.
class ImageCodec {
 public:
  virtual ~ImageCodec() = default;

  /// Writes the tile crop of `source` to `dest`. Tiles smaller than the
  /// nominal size are written at native size. Returns false when the source
  /// cannot be read.
  virtual bool write_crop(const std::filesystem::path& source, const TileSpec& tile,
                          const std::filesystem::path& dest) const = 0;

  /// Flat background with each annotation drawn as a filled rectangle.
  virtual void render_board(const AnnotatedImage& img, const std::filesystem::path& dest,
                            std::uint64_t seed) const = 0;
};

/// The codec compiled into this build, or nullptr.
std::unique_ptr<ImageCodec> make_image_codec();

}  // namespace tatm

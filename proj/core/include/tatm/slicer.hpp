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
#include <filesystem>
#include <string>
#include <vector>

#include "tatm/dataset.hpp"
#include "tatm/tiling.hpp"

namespace tatm {

class ImageCodec;

struct SliceParams {
  int tile_size = 640;
  int stride = 512;
  double min_visibility = 0.4;  ///< inclusive

  void validate() const;
};

/// Clipped fractions within this tolerance of the threshold count as meeting it.
inline constexpr double kVisibilityEps = 1e-9;

struct RetainedAnnotation {
  int class_id = 0;
  Box box;  ///< tile-local
  double visible_fraction = 0.0;
  std::size_t source_index = 0;  ///< index into the image's annotation list
  bool in_multiple_tiles = false;
};

struct TileRecord {
  std::string image_id;
  std::string file_name;  ///< source image
  TileSpec tile;
  std::vector<RetainedAnnotation> annotations;
  bool is_background = true;
  bool needs_letterbox = false;  ///< tile smaller than tile_size (image smaller than a tile)

  std::string stem() const;  ///< "<image stem>_r<row>_c<col>"
};

/// One record per grid tile in row-major order; every annotation whose
/// clipped visible fraction reaches min_visibility is kept in tile-local
/// coordinates, in source order.
std::vector<TileRecord> slice_image(const AnnotatedImage& img, const SliceParams& params);

struct SliceSummary {
  std::size_t images = 0;
  std::size_t tiles = 0;
  std::size_t positive_tiles = 0;
  std::size_t background_tiles = 0;
  double positive_ratio = 0.0;
  std::size_t source_annotations = 0;
  std::size_t retained_annotations = 0;
  std::size_t multi_tile_annotations = 0;
  std::vector<std::size_t> per_class_retained;
};

struct SliceResult {
  std::vector<TileRecord> records;
  SliceSummary summary;
};

SliceResult slice_dataset(const Dataset& ds, const SliceParams& params, unsigned jobs = 1);

enum class LabelFormat { kYoloTxt, kCocoJson };
LabelFormat parse_label_format(const std::string& name);

struct EmitOptions {
  LabelFormat format = LabelFormat::kYoloTxt;
  const ImageCodec* codec = nullptr;  ///< crops are written only when set
  std::string crop_extension = ".png";
};

struct EmitReport {
  std::size_t label_files = 0;
  std::size_t crops_written = 0;
  std::vector<std::string> unreadable_images;
};

/// Writes labels/, classes.txt, tiles.json and (with a codec) images/ under
/// out_dir. Background tiles get empty label files. A write failure throws
/// Error noting that partial output may remain.
EmitReport emit_training_labels(const SliceResult& sliced, const Dataset& ds,
                                const SliceParams& params, const std::filesystem::path& out_dir,
                                const EmitOptions& opts);

/// Grid manifest per image extended with per-tile annotation lists.
std::string tile_manifest_json(const SliceResult& sliced, const SliceParams& params);
std::string slice_summary_json(const SliceSummary& s, const ClassMap& classes);

}  // namespace tatm

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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tatm/dataset.hpp"
#include "tatm/merging.hpp"
#include "tatm/tiling.hpp"

namespace tatm {

/// Fixed 6-decimal rendering used by every text writer.
std::string format_fixed6(double v);

/// Rounds to 6 decimals so that JSON numbers print reproducibly.
double round6(double v) noexcept;

// ---------------------------------------------------------------------------
// COCO subset: images[{id,file_name,width,height}],
// annotations[{id,image_id,category_id,bbox:[x,y,w,h]}], categories[{id,name}].

struct RecordError {
  std::string where;  ///< e.g. "annotation 17"
  std::string message;
};

struct CocoReadResult {
  Dataset dataset;
  std::vector<RecordError> errors;
};

/// Non-strict: bad records are skipped and reported in `errors`.
/// Strict: any record error throws FormatError listing all of them.
CocoReadResult parse_coco(std::string_view json_text, bool strict = false,
                          const std::string& source = "coco");
CocoReadResult read_coco(const std::filesystem::path& path, bool strict = false);

std::string to_coco_json(const Dataset& ds);
void write_coco(const Dataset& ds, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// YOLO: one "<class> <cx> <cy> <w> <h>" line per box, normalised to the image.

struct ImageMeta {
  std::string image_id;
  std::string file_name;
  int width = 0;
  int height = 0;
};

/// "class_id cx cy w h" with 6 decimals.
std::string format_yolo_line(int class_id, const Box& b, double frame_w, double frame_h);
std::string format_yolo_labels(std::span<const Annotation> anns, double frame_w, double frame_h);

/// Parses one label file body into boxes in the frame's pixel coordinates.
std::vector<Annotation> parse_yolo_labels(std::string_view text, double frame_w, double frame_h,
                                          std::size_t class_count, const std::string& source);

/// Label files are looked up as <labels_dir>/<stem of file_name>.txt; a
/// missing file means a background image.
Dataset read_yolo(const std::filesystem::path& labels_dir, std::span<const ImageMeta> images,
                  const std::filesystem::path& class_file);

/// Reads "file_name,width,height" lines (optional header) into image metadata.
std::vector<ImageMeta> read_image_meta_csv(const std::filesystem::path& path);

std::vector<std::string> read_class_file(const std::filesystem::path& path);
std::string format_class_file(const ClassMap& classes);

/// "name=target" per line.
ClassAliases read_class_aliases(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Detection interchange: newline-delimited JSON, one record per line.

struct DetectionRecord {
  std::string image_id;
  std::string strategy;
  std::optional<TileSpec> tile;
  std::optional<Box> box_tile;
  Box box_global;
  double score = 0.0;
  int class_id = 0;
  std::string class_name;
  std::optional<double> boundary_distance;
  std::optional<double> agreement;
  std::optional<double> adjusted_score;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Fixed key order, 6-decimal floats, no trailing newline.
std::string format_detection_record(const DetectionRecord& r);

/// Validates the schema; tolerates unknown keys. Throws FormatError naming
/// the offending field.
DetectionRecord parse_detection_record(std::string_view line, const std::string& source = {},
                                       std::size_t line_no = 0);

void write_detections(std::ostream& os, std::span<const DetectionRecord> records);
void write_detections(const std::filesystem::path& path, std::span<const DetectionRecord> records);
std::vector<DetectionRecord> read_detections(std::istream& is, const std::string& source = {});
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);

/// Detection <-> record. `tile_spec` is required to fill the record's tile
/// block when the detection has tile provenance.
DetectionRecord to_record(const Detection& d, std::string image_id, std::string strategy,
                          const TileSpec* tile_spec, const ClassMap& classes);
Detection from_record(const DetectionRecord& r);

// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: to a temp sibling then rename.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace tatm

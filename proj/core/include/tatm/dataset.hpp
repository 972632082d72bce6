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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tatm/geometry.hpp"

namespace tatm {

struct Annotation {
  int class_id = 0;
  Box box;  ///< global pixel coordinates
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct AnnotatedImage {
  std::string image_id;
  std::string file_name;  ///< relative to the dataset image root
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;
};

/// Contiguous class ids 0..n-1. `source_ids` keeps the COCO category id each
/// class came from (empty for YOLO input).
struct ClassMap {
  std::vector<std::string> names;
  std::vector<std::int64_t> source_ids;

  std::size_t size() const noexcept { return names.size(); }
  std::optional<int> find(const std::string& name) const;
  std::string name_of(int class_id) const;
};

struct Dataset {
  std::string id;
  std::string image_root;  ///< directory that file_name entries are relative to
  ClassMap classes;
  std::vector<AnnotatedImage> images;
  std::vector<std::string> warnings;

  std::size_t annotation_count() const noexcept;
  const AnnotatedImage* find(const std::string& image_id) const noexcept;
};

/// Explicit class-name aliases, e.g. {"missing_hole" -> "missing_pad"}.
using ClassAliases = std::map<std::string, std::string>;

/// Rewrites the dataset's class ids onto `target`, matching names exactly or
/// through `aliases`. Throws ConfigError on an unmappable class.
void remap_classes(Dataset& ds, const ClassMap& target, const ClassAliases& aliases = {});

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle-then-cut split over image indices. Fractions must sum to 1;
/// the test split takes the remainder after rounding.
DatasetSplit split_dataset(std::size_t image_count, double train_fraction, double val_fraction,
                           std::uint64_t seed = 42);

/// Dataset-level statistics in the shape of a dataset specification table.
struct DatasetStats {
  std::size_t images = 0;
  std::size_t annotations = 0;
  double annotations_per_image = 0.0;
  int min_width = 0, max_width = 0;
  int min_height = 0, max_height = 0;
  double median_width = 0.0, median_height = 0.0;
  double min_box_area = 0.0;
  double median_box_area = 0.0;
  std::size_t boxes_below_small_threshold = 0;  ///< apparent area < threshold at input size
  int input_size = 640;
  double small_threshold = 64.0;
  std::vector<std::size_t> per_class;
};

DatasetStats compute_dataset_stats(const Dataset& ds, int input_size = 640,
                                   double small_threshold = 64.0);

double median(std::vector<double> values);

}  // namespace tatm

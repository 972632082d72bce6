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

#include "tatm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tatm/error.hpp"

namespace tatm {

std::optional<int> ClassMap::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string ClassMap::name_of(int class_id) const {
  if (class_id >= 0 && static_cast<std::size_t>(class_id) < names.size()) {
    return names[static_cast<std::size_t>(class_id)];
  }
  return "class_" + std::to_string(class_id);
}

std::size_t Dataset::annotation_count() const noexcept {
  std::size_t n = 0;
  for (const auto& img : images) n += img.annotations.size();
  return n;
}

const AnnotatedImage* Dataset::find(const std::string& image_id) const noexcept {
  for (const auto& img : images) {
    if (img.image_id == image_id) return &img;
  }
  return nullptr;
}

void remap_classes(Dataset& ds, const ClassMap& target, const ClassAliases& aliases) {
  std::vector<int> mapping(ds.classes.size(), -1);
  for (std::size_t i = 0; i < ds.classes.size(); ++i) {
    std::string name = ds.classes.names[i];
    auto hit = target.find(name);
    if (!hit) {
      if (auto a = aliases.find(name); a != aliases.end()) hit = target.find(a->second);
    }
    if (!hit) throw ConfigError("class '" + name + "' has no match in the target class map");
    mapping[i] = *hit;
  }
  for (auto& img : ds.images) {
    for (auto& a : img.annotations) {
      if (a.class_id < 0 || static_cast<std::size_t>(a.class_id) >= mapping.size()) {
        throw ConfigError("annotation class id " + std::to_string(a.class_id) + " out of range");
      }
      a.class_id = mapping[static_cast<std::size_t>(a.class_id)];
    }
  }
  ds.classes = target;
}

DatasetSplit split_dataset(std::size_t n, double train_fraction, double val_fraction,
                           std::uint64_t seed) {
  if (train_fraction < 0.0 || val_fraction < 0.0 || train_fraction + val_fraction > 1.0 + 1e-12) {
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates over mt19937_64 directly; std::shuffle is not portable across
  // standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  // Validation rounds down so test takes the remainder: 230 images give 161/34/35.
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n) + 1e-9)));
  DatasetSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

DatasetStats compute_dataset_stats(const Dataset& ds, int input_size, double small_threshold) {
  DatasetStats s;
  s.input_size = input_size;
  s.small_threshold = small_threshold;
  s.images = ds.images.size();
  s.per_class.assign(ds.classes.size(), 0);
  std::vector<double> widths, heights, areas;
  for (const auto& img : ds.images) {
    widths.push_back(img.width);
    heights.push_back(img.height);
    for (const auto& a : img.annotations) {
      ++s.annotations;
      areas.push_back(a.box.area());
      if (apparent_area(a.box, img.width, img.height, input_size) < small_threshold) {
        ++s.boxes_below_small_threshold;
      }
      if (a.class_id >= 0 && static_cast<std::size_t>(a.class_id) < s.per_class.size()) {
        ++s.per_class[static_cast<std::size_t>(a.class_id)];
      }
    }
  }
  if (!ds.images.empty()) {
    s.annotations_per_image = static_cast<double>(s.annotations) / static_cast<double>(s.images);
    s.min_width = static_cast<int>(*std::min_element(widths.begin(), widths.end()));
    s.max_width = static_cast<int>(*std::max_element(widths.begin(), widths.end()));
    s.min_height = static_cast<int>(*std::min_element(heights.begin(), heights.end()));
    s.max_height = static_cast<int>(*std::max_element(heights.begin(), heights.end()));
    s.median_width = median(widths);
    s.median_height = median(heights);
  }
  if (!areas.empty()) {
    s.min_box_area = *std::min_element(areas.begin(), areas.end());
    s.median_box_area = median(areas);
  }
  return s;
}

}  // namespace tatm

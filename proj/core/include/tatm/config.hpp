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
#include <string>
#include <string_view>
#include <vector>

#include "tatm/merging.hpp"

namespace tatm {

struct BackendConfig {
  std::string kind = "precomputed";  ///< precomputed | subprocess | sim
  std::string cmd;                   ///< subprocess command line
  std::string dir;                   ///< precomputed detections directory
  std::string sim;                   ///< simulated-detector parameter file (JSON)
};

/// Flat key-value run configuration. Defaults reproduce the reference setup:
/// tile 640, stride 512, conf 0.25, NMS IoU 0.45, tau 16 px, lambda 0.2.
struct Config {
  int tile_size = 640;
  int stride = 512;
  double conf = 0.25;
  double nms_iou = 0.45;
  double tau = 16.0;
  double lambda = 0.2;
  double mu = 0.0;
  std::vector<int> input_full{640, 1280};
  std::string classes_file;
  BackendConfig backend;
  std::uint64_t seed = 42;
  bool filter_after_adjust = false;

  /// Sets one documented key; throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  void validate() const;
  MergeParams merge_params() const;

  /// "key = value" lines in a fixed order.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string params_hash() const;

  static const std::vector<std::string>& keys();
};

/// Lines of "key = value"; '#' starts a comment; blank lines ignored.
Config parse_config(std::string_view text, const std::string& source = "config");
Config load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view data) noexcept;

}  // namespace tatm

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
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tatm/dataset.hpp"
#include "tatm/formats.hpp"
#include "tatm/geometry.hpp"
#include "tatm/tiling.hpp"

namespace tatm {

/// One detector invocation: an image region at a stated target input size.
struct WorkUnit {
  std::string unit_id;
  std::string image_id;
  std::string image_path;
  std::string strategy;  ///< strategy tag, used to key precomputed detections
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  int target_input = 640;
  std::optional<TileSpec> tile;  ///< set for tiled strategies
  double scale = 1.0;            ///< resize factor for whole-image units

  Point origin() const noexcept { return {static_cast<double>(x0), static_cast<double>(y0)}; }
};

struct RawDetection {
  Box box;  ///< region-local px, or input-frame px when input_scale is set
  double score = 0.0;
  int class_id = 0;
};

struct UnitResult {
  std::string unit_id;
  std::vector<RawDetection> detections;
  /// Per-axis scale from region pixels to the frame the boxes are in. Absent
  /// means boxes are already region-local pixels.
  std::optional<std::array<double, 2>> input_scale;
  std::optional<std::string> error;
};

/// Supplies raw detections for work units. Implementations must be
/// deterministic and safe to call from several threads.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string id() const = 0;
  /// Results in the same order as `units`.
  virtual std::vector<UnitResult> detect(const AnnotatedImage& image,
                                         std::span<const WorkUnit> units) = 0;
};

/// Reads <dir>/<image_id>.jsonl interchange files. Tile units take records
/// whose tile block matches the unit's tile exactly; whole-image units take
/// records with a null tile and a matching (or empty) strategy tag. A missing
/// file yields no detections.
class PrecomputedBackend final : public DetectorBackend {
 public:
  explicit PrecomputedBackend(std::filesystem::path dir);
  std::string id() const override;
  std::vector<UnitResult> detect(const AnnotatedImage& image,
                                 std::span<const WorkUnit> units) override;

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Subprocess protocol (newline-delimited UTF-8 JSON):
//   handshake  {"protocol_version":1,"backend_id":...,"max_in_flight":N}
//   request    {"unit_id":...,"image_path":...,"region":[x0,y0,w,h],"target_input":px}
//   response   {"unit_id":...,"detections":[{"box":[x1,y1,x2,y2],"score":s,"class_id":c}],
//               "input_scale":[sx,sy]?, "error":"..."?}

inline constexpr int kProtocolVersion = 1;

struct Handshake {
  int protocol_version = kProtocolVersion;
  std::string backend_id;
  int max_in_flight = 1;
};

std::string format_handshake(const Handshake& h);
Handshake parse_handshake(std::string_view line);
std::string format_request(const WorkUnit& unit);
/// Parses a request line back into the fields the protocol carries.
WorkUnit parse_request(std::string_view line);
std::string format_response(const UnitResult& r);
UnitResult parse_response(std::string_view line);

/// Launches `command` through /bin/sh once and speaks the protocol over its
/// stdin/stdout. Requests are pipelined up to the backend's max_in_flight;
/// calls from different threads are serialised.
class SubprocessBackend final : public DetectorBackend {
 public:
  explicit SubprocessBackend(const std::string& command);
  ~SubprocessBackend() override;
  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  std::string id() const override { return handshake_.backend_id; }
  const Handshake& handshake() const noexcept { return handshake_; }
  std::vector<UnitResult> detect(const AnnotatedImage& image,
                                 std::span<const WorkUnit> units) override;

 private:
  void send_line(const std::string& line);
  std::optional<std::string> read_line();
  void shutdown() noexcept;

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  Handshake handshake_;
  std::mutex mu_;
  bool broken_ = false;
};

}  // namespace tatm

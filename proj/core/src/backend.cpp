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

#include "tatm/backend.hpp"

#include <fstream>

#include "json.hpp"
#include "tatm/error.hpp"

namespace tatm {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

PrecomputedBackend::PrecomputedBackend(fs::path dir) : dir_(std::move(dir)) {}

std::string PrecomputedBackend::id() const { return "precomputed:" + dir_.string(); }

std::vector<UnitResult> PrecomputedBackend::detect(const AnnotatedImage& image,
                                                   std::span<const WorkUnit> units) {
  std::vector<DetectionRecord> records;
  const fs::path file = dir_ / (image.image_id + ".jsonl");
  if (fs::exists(file)) records = read_detections(file);

  std::vector<UnitResult> out;
  out.reserve(units.size());
  for (const auto& u : units) {
    UnitResult r;
    r.unit_id = u.unit_id;
    for (const auto& rec : records) {
      if (u.tile) {
        if (!rec.tile || *rec.tile != *u.tile) continue;
        const Box local = rec.box_tile ? *rec.box_tile : remap_to_local(rec.box_global, u.origin());
        r.detections.push_back({local, rec.score, rec.class_id});
      } else {
        if (rec.tile) continue;
        if (!rec.strategy.empty() && rec.strategy != u.strategy) continue;
        r.detections.push_back({rec.box_global, rec.score, rec.class_id});
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocol

namespace {

json parse_object(std::string_view line, const char* what) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(std::string(what) + ": expected a JSON object");
  return j;
}

}  // namespace

std::string format_handshake(const Handshake& h) {
  ordered_json j;
  j["protocol_version"] = h.protocol_version;
  j["backend_id"] = h.backend_id;
  j["max_in_flight"] = h.max_in_flight;
  return j.dump();
}

Handshake parse_handshake(std::string_view line) {
  const json j = parse_object(line, "handshake");
  Handshake h;
  try {
    h.protocol_version = j.at("protocol_version").get<int>();
    h.backend_id = j.at("backend_id").get<std::string>();
    h.max_in_flight = j.value("max_in_flight", 1);
  } catch (const json::exception& e) {
    throw FormatError(std::string("handshake: ") + e.what());
  }
  if (h.protocol_version != kProtocolVersion) {
    throw BackendError("unsupported protocol_version " + std::to_string(h.protocol_version));
  }
  if (h.max_in_flight < 1) h.max_in_flight = 1;
  return h;
}

std::string format_request(const WorkUnit& u) {
  ordered_json j;
  j["unit_id"] = u.unit_id;
  j["image_path"] = u.image_path;
  j["region"] = {u.x0, u.y0, u.width, u.height};
  j["target_input"] = u.target_input;
  return j.dump();
}

WorkUnit parse_request(std::string_view line) {
  const json j = parse_object(line, "request");
  WorkUnit u;
  try {
    u.unit_id = j.at("unit_id").get<std::string>();
    u.image_path = j.at("image_path").get<std::string>();
    const auto& r = j.at("region");
    if (!r.is_array() || r.size() != 4) throw FormatError("request: region must have 4 integers");
    u.x0 = r[0].get<int>();
    u.y0 = r[1].get<int>();
    u.width = r[2].get<int>();
    u.height = r[3].get<int>();
    u.target_input = j.at("target_input").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("request: ") + e.what());
  }
  return u;
}

std::string format_response(const UnitResult& r) {
  ordered_json j;
  j["unit_id"] = r.unit_id;
  auto dets = ordered_json::array();
  for (const auto& d : r.detections) {
    ordered_json o;
    o["box"] = {round6(d.box.x1), round6(d.box.y1), round6(d.box.x2), round6(d.box.y2)};
    o["score"] = round6(d.score);
    o["class_id"] = d.class_id;
    dets.push_back(std::move(o));
  }
  j["detections"] = std::move(dets);
  if (r.input_scale) j["input_scale"] = {(*r.input_scale)[0], (*r.input_scale)[1]};
  if (r.error) j["error"] = *r.error;
  return j.dump();
}

UnitResult parse_response(std::string_view line) {
  const json j = parse_object(line, "response");
  UnitResult r;
  try {
    r.unit_id = j.at("unit_id").get<std::string>();
    if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
    if (j.contains("detections")) {
      for (const auto& d : j["detections"]) {
        const auto& b = d.at("box");
        if (!b.is_array() || b.size() != 4) throw FormatError("response: box must have 4 numbers");
        RawDetection rd{{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()},
                        d.at("score").get<double>(),
                        d.at("class_id").get<int>()};
        if (!is_valid(rd.box)) throw FormatError("response: malformed box");
        if (!(rd.score >= 0.0 && rd.score <= 1.0)) throw FormatError("response: score outside [0,1]");
        r.detections.push_back(rd);
      }
    } else if (!r.error) {
      throw FormatError("response: missing detections");
    }
    if (j.contains("input_scale") && !j["input_scale"].is_null()) {
      const auto& s = j["input_scale"];
      if (!s.is_array() || s.size() != 2) throw FormatError("response: input_scale must have 2 numbers");
      r.input_scale = std::array<double, 2>{s[0].get<double>(), s[1].get<double>()};
      if (!((*r.input_scale)[0] > 0.0 && (*r.input_scale)[1] > 0.0)) {
        throw FormatError("response: input_scale must be positive");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("response: ") + e.what());
  }
  return r;
}

}  // namespace tatm

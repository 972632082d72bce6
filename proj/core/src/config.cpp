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

#include "tatm/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "tatm/error.hpp"
#include "tatm/formats.hpp"

namespace tatm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(std::string(key) + ": invalid value '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false");
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k{
      "tile_size",   "stride",       "conf",        "nms_iou",     "tau",
      "lambda",      "mu",           "input_full",  "classes_file", "backend.kind",
      "backend.cmd", "backend.dir",  "backend.sim", "seed",        "filter_after_adjust"};
  return k;
}

void Config::set(std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "tile_size") {
    tile_size = parse_number<int>(key, v);
  } else if (key == "stride") {
    stride = parse_number<int>(key, v);
  } else if (key == "conf") {
    conf = parse_number<double>(key, v);
  } else if (key == "nms_iou") {
    nms_iou = parse_number<double>(key, v);
  } else if (key == "tau") {
    tau = parse_number<double>(key, v);
  } else if (key == "lambda") {
    lambda = parse_number<double>(key, v);
  } else if (key == "mu") {
    mu = parse_number<double>(key, v);
  } else if (key == "input_full") {
    input_full.clear();
    std::string_view rest = v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      input_full.push_back(parse_number<int>(key, trim(rest.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  } else if (key == "classes_file") {
    classes_file = std::string(v);
  } else if (key == "backend.kind") {
    backend.kind = std::string(v);
  } else if (key == "backend.cmd") {
    backend.cmd = std::string(v);
  } else if (key == "backend.dir") {
    backend.dir = std::string(v);
  } else if (key == "backend.sim") {
    backend.sim = std::string(v);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "filter_after_adjust") {
    filter_after_adjust = parse_bool(key, v);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

MergeParams Config::merge_params() const {
  MergeParams m;
  m.conf_threshold = conf;
  m.nms_iou = nms_iou;
  m.tau = tau;
  m.lambda = lambda;
  m.mu = mu;
  return m;
}

void Config::validate() const {
  if (tile_size <= 0) throw ConfigError("tile_size must be positive");
  if (stride <= 0 || stride > tile_size) throw ConfigError("stride must lie in (0, tile_size]");
  merge_params().validate();
  for (int k : input_full) {
    if (k <= 0) throw ConfigError("input_full sizes must be positive");
  }
  if (backend.kind != "precomputed" && backend.kind != "subprocess" && backend.kind != "sim") {
    throw ConfigError("backend.kind must be precomputed, subprocess or sim");
  }
}

std::string Config::canonical() const {
  std::string out;
  auto line = [&](const char* k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  std::string sizes;
  for (std::size_t i = 0; i < input_full.size(); ++i) {
    if (i) sizes += ',';
    sizes += std::to_string(input_full[i]);
  }
  line("tile_size", std::to_string(tile_size));
  line("stride", std::to_string(stride));
  line("conf", format_fixed6(conf));
  line("nms_iou", format_fixed6(nms_iou));
  line("tau", format_fixed6(tau));
  line("lambda", format_fixed6(lambda));
  line("mu", format_fixed6(mu));
  line("input_full", sizes);
  line("classes_file", classes_file);
  line("backend.kind", backend.kind);
  line("backend.cmd", backend.cmd);
  line("backend.dir", backend.dir);
  line("backend.sim", backend.sim);
  line("seed", std::to_string(seed));
  line("filter_after_adjust", filter_after_adjust ? "true" : "false");
  return out;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string Config::params_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

Config parse_config(std::string_view text, const std::string& source) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view l = trim(line);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw FormatError("expected key = value", source, line_no);
    try {
      cfg.set(trim(l.substr(0, eq)), l.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path), path.string());
}

}  // namespace tatm

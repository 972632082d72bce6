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

#include "tatm/formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tatm/error.hpp"

namespace tatm {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

double round6(double v) noexcept {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file for reading", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open file for writing", tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw FormatError("write failed", tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// COCO

namespace {

std::string id_to_string(const json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_string()) return v.get<std::string>();
  throw std::invalid_argument("id must be an integer or string");
}

}  // namespace

CocoReadResult parse_coco(std::string_view text, bool strict, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), source);
  }
  for (const char* key : {"images", "annotations", "categories"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw FormatError(std::string("missing array '") + key + "'", source);
    }
  }

  CocoReadResult result;
  Dataset& ds = result.dataset;
  ds.id = source;
  auto error = [&](std::string where, std::string msg) {
    result.errors.push_back({std::move(where), std::move(msg)});
  };

  std::vector<std::pair<std::int64_t, std::string>> cats;
  for (std::size_t i = 0; i < j["categories"].size(); ++i) {
    const auto& c = j["categories"][i];
    if (!c.contains("id") || !c["id"].is_number_integer() || !c.contains("name") ||
        !c["name"].is_string()) {
      error("category " + std::to_string(i), "needs integer id and string name");
      continue;
    }
    cats.emplace_back(c["id"].get<std::int64_t>(), c["name"].get<std::string>());
  }
  std::sort(cats.begin(), cats.end());
  std::map<std::int64_t, int> cat_to_class;
  for (const auto& [id, name] : cats) {
    if (cat_to_class.count(id)) {
      error("category " + std::to_string(id), "duplicate category id");
      continue;
    }
    cat_to_class[id] = static_cast<int>(ds.classes.names.size());
    ds.classes.names.push_back(name);
    ds.classes.source_ids.push_back(id);
  }

  std::map<std::string, std::size_t> image_index;
  for (std::size_t i = 0; i < j["images"].size(); ++i) {
    const auto& im = j["images"][i];
    const std::string where = "image " + (im.contains("id") ? im["id"].dump() : "#" + std::to_string(i));
    try {
      AnnotatedImage img;
      img.image_id = id_to_string(im.at("id"));
      img.file_name = im.at("file_name").get<std::string>();
      img.width = im.at("width").get<int>();
      img.height = im.at("height").get<int>();
      if (img.width <= 0 || img.height <= 0) {
        error(where, "width and height must be positive");
        continue;
      }
      if (image_index.count(img.image_id)) {
        error(where, "duplicate image id");
        continue;
      }
      image_index[img.image_id] = ds.images.size();
      ds.images.push_back(std::move(img));
    } catch (const std::exception& e) {
      error(where, std::string("missing or invalid field: ") + e.what());
    }
  }

  bool warned_extras = false;
  for (std::size_t i = 0; i < j["annotations"].size(); ++i) {
    const auto& an = j["annotations"][i];
    const std::string where =
        "annotation " + (an.contains("id") ? an["id"].dump() : "#" + std::to_string(i));
    try {
      const std::string image_id = id_to_string(an.at("image_id"));
      auto it = image_index.find(image_id);
      if (it == image_index.end()) {
        error(where, "references absent image_id " + image_id);
        continue;
      }
      const auto cat = an.at("category_id").get<std::int64_t>();
      auto ct = cat_to_class.find(cat);
      if (ct == cat_to_class.end()) {
        error(where, "references unknown category_id " + std::to_string(cat));
        continue;
      }
      const auto& bb = an.at("bbox");
      if (!bb.is_array() || bb.size() != 4) {
        error(where, "bbox must have 4 numbers");
        continue;
      }
      const double x = bb[0].get<double>(), y = bb[1].get<double>();
      const double w = bb[2].get<double>(), h = bb[3].get<double>();
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h) ||
          w < 0.0 || h < 0.0) {
        error(where, "bbox has negative or non-finite extent");
        continue;
      }
      if (!warned_extras && (an.contains("segmentation") || an.contains("iscrowd"))) {
        ds.warnings.push_back("segmentation/iscrowd fields are ignored");
        warned_extras = true;
      }
      AnnotatedImage& img = ds.images[it->second];
      Box b{x, y, x + w, y + h};
      const Box frame{0.0, 0.0, static_cast<double>(img.width), static_cast<double>(img.height)};
      if (b.area() <= 0.0) {
        ds.warnings.push_back(where + ": zero-area box dropped");
        continue;
      }
      auto clipped = intersection(b, frame);
      if (!clipped) {
        error(where, "bbox lies outside image " + image_id);
        continue;
      }
      if (*clipped != b) {
        ds.warnings.push_back(where + ": bbox clipped to image bounds");
        b = *clipped;
      }
      img.annotations.push_back({ct->second, b});
    } catch (const std::exception& e) {
      error(where, std::string("missing or invalid field: ") + e.what());
    }
  }

  if (strict && !result.errors.empty()) {
    std::string msg = std::to_string(result.errors.size()) + " invalid record(s):";
    for (const auto& e : result.errors) msg += " [" + e.where + ": " + e.message + "]";
    throw FormatError(msg, source);
  }
  return result;
}

CocoReadResult read_coco(const fs::path& path, bool strict) {
  auto r = parse_coco(read_text_file(path), strict, path.string());
  r.dataset.id = path.stem().string();
  r.dataset.image_root = path.parent_path().string();
  return r;
}

std::string to_coco_json(const Dataset& ds) {
  ordered_json j;
  auto images = ordered_json::array();
  auto anns = ordered_json::array();
  auto cats = ordered_json::array();
  auto image_id_json = [](const std::string& id) -> ordered_json {
    const bool numeric = !id.empty() && id.size() < 18 &&
                         std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (numeric) return std::stoll(id);
    return id;
  };
  auto category_id = [&](int class_id) -> std::int64_t {
    const auto c = static_cast<std::size_t>(class_id);
    if (c < ds.classes.source_ids.size()) return ds.classes.source_ids[c];
    return class_id + 1;
  };
  std::int64_t next_ann = 1;
  for (const auto& img : ds.images) {
    ordered_json im;
    im["id"] = image_id_json(img.image_id);
    im["file_name"] = img.file_name;
    im["width"] = img.width;
    im["height"] = img.height;
    images.push_back(std::move(im));
    for (const auto& a : img.annotations) {
      ordered_json an;
      an["id"] = next_ann++;
      an["image_id"] = image_id_json(img.image_id);
      an["category_id"] = category_id(a.class_id);
      an["bbox"] = {round6(a.box.x1), round6(a.box.y1), round6(a.box.width()), round6(a.box.height())};
      an["area"] = round6(a.box.area());
      anns.push_back(std::move(an));
    }
  }
  for (std::size_t c = 0; c < ds.classes.size(); ++c) {
    ordered_json cat;
    cat["id"] = category_id(static_cast<int>(c));
    cat["name"] = ds.classes.names[c];
    cats.push_back(std::move(cat));
  }
  j["images"] = std::move(images);
  j["annotations"] = std::move(anns);
  j["categories"] = std::move(cats);
  return j.dump(1) + "\n";
}

void write_coco(const Dataset& ds, const fs::path& path) { write_text_file(path, to_coco_json(ds)); }

// ---------------------------------------------------------------------------
// YOLO

std::string format_yolo_line(int class_id, const Box& b, double fw, double fh) {
  std::string s = std::to_string(class_id);
  for (double v : {b.center_x() / fw, b.center_y() / fh, b.width() / fw, b.height() / fh}) {
    s += ' ';
    s += format_fixed6(v);
  }
  return s;
}

std::string format_yolo_labels(std::span<const Annotation> anns, double fw, double fh) {
  std::string out;
  for (const auto& a : anns) {
    out += format_yolo_line(a.class_id, a.box, fw, fh);
    out += '\n';
  }
  return out;
}

std::vector<Annotation> parse_yolo_labels(std::string_view text, double fw, double fh,
                                          std::size_t class_count, const std::string& source) {
  std::vector<Annotation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.size() != 5) {
      throw FormatError("expected 5 tokens, got " + std::to_string(tok.size()), source, line_no);
    }
    int cls = 0;
    double v[4];
    try {
      std::size_t used = 0;
      cls = std::stoi(tok[0], &used);
      if (used != tok[0].size()) throw std::invalid_argument("class");
      for (int k = 0; k < 4; ++k) {
        v[k] = std::stod(tok[static_cast<std::size_t>(k + 1)], &used);
        if (used != tok[static_cast<std::size_t>(k + 1)].size()) throw std::invalid_argument("value");
      }
    } catch (const std::exception&) {
      throw FormatError("non-numeric token", source, line_no);
    }
    if (cls < 0 || (class_count > 0 && static_cast<std::size_t>(cls) >= class_count)) {
      throw FormatError("class id " + std::to_string(cls) + " out of range", source, line_no);
    }
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) throw FormatError("normalised value outside [0,1]", source, line_no);
    }
    const double cx = v[0] * fw, cy = v[1] * fh, w = v[2] * fw, h = v[3] * fh;
    Box b{std::max(0.0, cx - w / 2), std::max(0.0, cy - h / 2), std::min(fw, cx + w / 2),
          std::min(fh, cy + h / 2)};
    if (!is_valid(b)) throw FormatError("box falls outside the image", source, line_no);
    out.push_back({cls, b});
  }
  return out;
}

std::vector<std::string> read_class_file(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

std::string format_class_file(const ClassMap& classes) {
  std::string out;
  for (const auto& n : classes.names) out += n + "\n";
  return out;
}

ClassAliases read_class_aliases(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  ClassAliases aliases;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("expected name=target", path.string(), line_no);
    aliases[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return aliases;
}

std::vector<ImageMeta> read_image_meta_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<ImageMeta> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() != 3) throw FormatError("expected file_name,width,height", path.string(), line_no);
    if (line_no == 1 && cols[1] == "width") continue;
    ImageMeta m;
    m.file_name = cols[0];
    m.image_id = fs::path(cols[0]).stem().string();
    try {
      m.width = std::stoi(cols[1]);
      m.height = std::stoi(cols[2]);
    } catch (const std::exception&) {
      throw FormatError("invalid width/height", path.string(), line_no);
    }
    if (m.width <= 0 || m.height <= 0) throw FormatError("invalid width/height", path.string(), line_no);
    out.push_back(std::move(m));
  }
  return out;
}

Dataset read_yolo(const fs::path& labels_dir, std::span<const ImageMeta> images,
                  const fs::path& class_file) {
  Dataset ds;
  ds.id = labels_dir.parent_path().filename().string();
  ds.classes.names = read_class_file(class_file);
  for (const auto& m : images) {
    AnnotatedImage img;
    img.image_id = m.image_id.empty() ? fs::path(m.file_name).stem().string() : m.image_id;
    img.file_name = m.file_name;
    img.width = m.width;
    img.height = m.height;
    const fs::path label = labels_dir / (fs::path(m.file_name).stem().string() + ".txt");
    if (fs::exists(label)) {
      img.annotations = parse_yolo_labels(read_text_file(label), m.width, m.height,
                                          ds.classes.size(), label.string());
    }
    std::erase_if(img.annotations, [&](const Annotation& a) {
      if (a.box.area() > 0.0) return false;
      ds.warnings.push_back(label.string() + ": zero-area box dropped");
      return true;
    });
    ds.images.push_back(std::move(img));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Detection interchange

namespace {

void append_box(std::string& s, const Box& b) {
  s += '[';
  s += format_fixed6(b.x1);
  s += ',';
  s += format_fixed6(b.y1);
  s += ',';
  s += format_fixed6(b.x2);
  s += ',';
  s += format_fixed6(b.y2);
  s += ']';
}

void append_opt(std::string& s, const std::optional<double>& v) {
  s += v ? format_fixed6(*v) : "null";
}

}  // namespace

std::string format_detection_record(const DetectionRecord& r) {
  std::string s;
  s.reserve(320);
  s += "{\"image_id\":";
  s += json(r.image_id).dump();
  s += ",\"strategy\":";
  s += json(r.strategy).dump();
  s += ",\"tile\":";
  if (r.tile) {
    const auto& t = *r.tile;
    s += "{\"row\":" + std::to_string(t.row) + ",\"col\":" + std::to_string(t.col) +
         ",\"x0\":" + std::to_string(t.x0) + ",\"y0\":" + std::to_string(t.y0) +
         ",\"w\":" + std::to_string(t.width) + ",\"h\":" + std::to_string(t.height) + "}";
  } else {
    s += "null";
  }
  s += ",\"box_tile\":";
  if (r.box_tile) {
    append_box(s, *r.box_tile);
  } else {
    s += "null";
  }
  s += ",\"box_global\":";
  append_box(s, r.box_global);
  s += ",\"score\":";
  s += format_fixed6(r.score);
  s += ",\"class_id\":";
  s += std::to_string(r.class_id);
  s += ",\"class_name\":";
  s += json(r.class_name).dump();
  s += ",\"boundary_distance\":";
  append_opt(s, r.boundary_distance);
  s += ",\"agreement\":";
  append_opt(s, r.agreement);
  s += ",\"adjusted_score\":";
  append_opt(s, r.adjusted_score);
  s += '}';
  return s;
}

DetectionRecord parse_detection_record(std::string_view line, const std::string& source,
                                       std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what(), source, line_no);
  }
  auto fail = [&](const std::string& field, const std::string& msg) -> FormatError {
    return FormatError("field '" + field + "': " + msg, source, line_no);
  };
  if (!j.is_object()) throw FormatError("record must be a JSON object", source, line_no);

  auto number = [&](const char* field) -> double {
    if (!j.contains(field) || !j[field].is_number()) throw fail(field, "missing or not a number");
    return j[field].get<double>();
  };
  auto unit_interval = [&](const char* field, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw fail(field, "value " + std::to_string(v) + " outside [0,1]");
  };
  auto opt_number = [&](const char* field) -> std::optional<double> {
    if (!j.contains(field) || j[field].is_null()) return std::nullopt;
    if (!j[field].is_number()) throw fail(field, "not a number");
    return j[field].get<double>();
  };
  auto box = [&](const char* field, const json& v) -> Box {
    if (!v.is_array() || v.size() != 4) throw fail(field, "must be an array of 4 numbers");
    for (const auto& x : v) {
      if (!x.is_number()) throw fail(field, "must be an array of 4 numbers");
    }
    Box b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
    if (!is_valid(b)) throw fail(field, "malformed box (x1 > x2 or y1 > y2)");
    return b;
  };

  DetectionRecord r;
  if (!j.contains("image_id")) throw fail("image_id", "missing");
  if (j["image_id"].is_string()) {
    r.image_id = j["image_id"].get<std::string>();
  } else if (j["image_id"].is_number_integer()) {
    r.image_id = std::to_string(j["image_id"].get<long long>());
  } else {
    throw fail("image_id", "must be a string");
  }
  if (j.contains("strategy") && !j["strategy"].is_null()) {
    if (!j["strategy"].is_string()) throw fail("strategy", "must be a string");
    r.strategy = j["strategy"].get<std::string>();
  }
  if (j.contains("tile") && !j["tile"].is_null()) {
    const auto& t = j["tile"];
    TileSpec ts;
    try {
      ts = {t.at("row").get<int>(), t.at("col").get<int>(), t.at("x0").get<int>(),
            t.at("y0").get<int>(), t.at("w").get<int>(),   t.at("h").get<int>()};
    } catch (const json::exception&) {
      throw fail("tile", "needs integer row, col, x0, y0, w, h");
    }
    if (ts.width <= 0 || ts.height <= 0) throw fail("tile", "w and h must be positive");
    r.tile = ts;
  }
  if (j.contains("box_tile") && !j["box_tile"].is_null()) r.box_tile = box("box_tile", j["box_tile"]);
  if (!j.contains("box_global")) throw fail("box_global", "missing");
  r.box_global = box("box_global", j["box_global"]);
  r.score = number("score");
  unit_interval("score", r.score);
  if (!j.contains("class_id") || !j["class_id"].is_number_integer()) {
    throw fail("class_id", "missing or not an integer");
  }
  r.class_id = j["class_id"].get<int>();
  if (r.class_id < 0) throw fail("class_id", "must be non-negative");
  if (j.contains("class_name") && !j["class_name"].is_null()) {
    if (!j["class_name"].is_string()) throw fail("class_name", "must be a string");
    r.class_name = j["class_name"].get<std::string>();
  }
  r.boundary_distance = opt_number("boundary_distance");
  if (r.boundary_distance && *r.boundary_distance < 0.0) throw fail("boundary_distance", "negative");
  r.agreement = opt_number("agreement");
  if (r.agreement) unit_interval("agreement", *r.agreement);
  r.adjusted_score = opt_number("adjusted_score");
  if (r.adjusted_score) unit_interval("adjusted_score", *r.adjusted_score);
  return r;
}

void write_detections(std::ostream& os, std::span<const DetectionRecord> records) {
  for (const auto& r : records) os << format_detection_record(r) << '\n';
}

void write_detections(const fs::path& path, std::span<const DetectionRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += format_detection_record(r);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<DetectionRecord> read_detections(std::istream& is, const std::string& source) {
  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_detection_record(line, source, line_no));
  }
  return out;
}

std::vector<DetectionRecord> read_detections(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file for reading", path.string());
  return read_detections(in, path.string());
}

DetectionRecord to_record(const Detection& d, std::string image_id, std::string strategy,
                          const TileSpec* tile_spec, const ClassMap& classes) {
  DetectionRecord r;
  r.image_id = std::move(image_id);
  r.strategy = std::move(strategy);
  if (d.tile && tile_spec != nullptr) r.tile = *tile_spec;
  r.box_tile = d.box_tile;
  r.box_global = d.box_global;
  r.score = d.score;
  r.class_id = d.class_id;
  r.class_name = classes.name_of(d.class_id);
  r.boundary_distance = d.boundary_distance;
  r.agreement = d.agreement;
  r.adjusted_score = d.adjusted_score;
  return r;
}

Detection from_record(const DetectionRecord& r) {
  Detection d;
  d.class_id = r.class_id;
  d.score = r.score;
  d.box_global = r.box_global;
  d.box_tile = r.box_tile;
  if (r.tile) d.tile = TileIndex{r.tile->row, r.tile->col};
  d.boundary_distance = r.boundary_distance;
  d.agreement = r.agreement;
  d.adjusted_score = r.adjusted_score;
  return d;
}

}  // namespace tatm

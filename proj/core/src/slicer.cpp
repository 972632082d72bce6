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

#include "tatm/slicer.hpp"

#include <map>

#include "json.hpp"
#include "tatm/error.hpp"
#include "tatm/formats.hpp"
#include "tatm/imaging.hpp"
#include "tatm/parallel.hpp"

namespace tatm {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void SliceParams::validate() const {
  if (tile_size <= 0) throw ConfigError("tile_size must be positive");
  if (stride <= 0 || stride > tile_size) throw ConfigError("stride must lie in (0, tile_size]");
  if (!(min_visibility > 0.0 && min_visibility <= 1.0)) {
    throw ConfigError("min_visibility must lie in (0, 1]");
  }
}

std::string TileRecord::stem() const {
  return fs::path(file_name.empty() ? image_id : file_name).stem().string() + "_r" +
         std::to_string(tile.row) + "_c" + std::to_string(tile.col);
}

std::vector<TileRecord> slice_image(const AnnotatedImage& img, const SliceParams& params) {
  params.validate();
  const TileGrid grid = plan_grid(img.width, img.height, params.tile_size, params.stride);
  std::vector<TileRecord> out;
  out.reserve(grid.tiles.size());
  std::vector<int> hits(img.annotations.size(), 0);
  for (const auto& t : grid.tiles) {
    TileRecord rec;
    rec.image_id = img.image_id;
    rec.file_name = img.file_name;
    rec.tile = t;
    rec.needs_letterbox = t.width < params.tile_size || t.height < params.tile_size;
    const Box rect = t.rect();
    for (std::size_t i = 0; i < img.annotations.size(); ++i) {
      const auto& a = img.annotations[i];
      const ClipResult c = clip_box(a.box, rect);
      if (!c.clipped) continue;
      if (c.visible_fraction + kVisibilityEps < params.min_visibility) continue;
      rec.annotations.push_back({a.class_id, remap_to_local(*c.clipped, t.origin()),
                                 c.visible_fraction, i, false});
      ++hits[i];
    }
    rec.is_background = rec.annotations.empty();
    out.push_back(std::move(rec));
  }
  for (auto& rec : out) {
    for (auto& a : rec.annotations) a.in_multiple_tiles = hits[a.source_index] > 1;
  }
  return out;
}

SliceResult slice_dataset(const Dataset& ds, const SliceParams& params, unsigned jobs) {
  params.validate();
  std::vector<std::vector<TileRecord>> per_image(ds.images.size());
  parallel_for(ds.images.size(), jobs,
               [&](std::size_t i) { per_image[i] = slice_image(ds.images[i], params); });

  SliceResult r;
  SliceSummary& s = r.summary;
  s.images = ds.images.size();
  s.per_class_retained.assign(ds.classes.size(), 0);
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    s.source_annotations += ds.images[i].annotations.size();
    std::map<std::size_t, bool> multi;
    for (auto& rec : per_image[i]) {
      ++s.tiles;
      if (rec.is_background) {
        ++s.background_tiles;
      } else {
        ++s.positive_tiles;
      }
      for (const auto& a : rec.annotations) {
        ++s.retained_annotations;
        if (a.in_multiple_tiles) multi[a.source_index] = true;
        if (a.class_id >= 0) {
          const auto c = static_cast<std::size_t>(a.class_id);
          if (c >= s.per_class_retained.size()) s.per_class_retained.resize(c + 1, 0);
          ++s.per_class_retained[c];
        }
      }
      r.records.push_back(std::move(rec));
    }
    s.multi_tile_annotations += multi.size();
  }
  s.positive_ratio = s.tiles == 0 ? 0.0 : static_cast<double>(s.positive_tiles) / static_cast<double>(s.tiles);
  return r;
}

LabelFormat parse_label_format(const std::string& name) {
  if (name == "yolo-txt") return LabelFormat::kYoloTxt;
  if (name == "coco-json") return LabelFormat::kCocoJson;
  throw ConfigError("unknown label format '" + name + "' (expected yolo-txt or coco-json)");
}

namespace {

ordered_json tile_annotations_json(const TileRecord& rec) {
  auto anns = ordered_json::array();
  for (const auto& a : rec.annotations) {
    ordered_json o;
    o["class_id"] = a.class_id;
    o["box"] = {round6(a.box.x1), round6(a.box.y1), round6(a.box.x2), round6(a.box.y2)};
    o["visible_fraction"] = round6(a.visible_fraction);
    o["source_index"] = a.source_index;
    o["in_multiple_tiles"] = a.in_multiple_tiles;
    anns.push_back(std::move(o));
  }
  return anns;
}

std::string tiles_as_coco(const SliceResult& sliced, const Dataset& ds,
                          const std::string& crop_ext) {
  Dataset tiles;
  tiles.classes = ds.classes;
  std::size_t next_id = 1;
  for (const auto& rec : sliced.records) {
    AnnotatedImage img;
    img.image_id = std::to_string(next_id++);
    img.file_name = "images/" + rec.stem() + crop_ext;
    img.width = rec.tile.width;
    img.height = rec.tile.height;
    for (const auto& a : rec.annotations) img.annotations.push_back({a.class_id, a.box});
    tiles.images.push_back(std::move(img));
  }
  return to_coco_json(tiles);
}

}  // namespace

std::string tile_manifest_json(const SliceResult& sliced, const SliceParams& params) {
  ordered_json root;
  root["tile_size"] = params.tile_size;
  root["stride"] = params.stride;
  root["min_visibility"] = round6(params.min_visibility);
  auto images = ordered_json::array();
  const TileRecord* prev = nullptr;
  ordered_json current;
  auto flush = [&] {
    if (prev != nullptr) images.push_back(std::move(current));
    current = ordered_json();
  };
  for (const auto& rec : sliced.records) {
    if (prev == nullptr || prev->image_id != rec.image_id) {
      flush();
      current["image_id"] = rec.image_id;
      current["file_name"] = rec.file_name;
      current["tiles"] = ordered_json::array();
    }
    ordered_json t;
    t["row"] = rec.tile.row;
    t["col"] = rec.tile.col;
    t["x0"] = rec.tile.x0;
    t["y0"] = rec.tile.y0;
    t["w"] = rec.tile.width;
    t["h"] = rec.tile.height;
    t["stem"] = rec.stem();
    t["background"] = rec.is_background;
    t["letterbox"] = rec.needs_letterbox;
    t["annotations"] = tile_annotations_json(rec);
    current["tiles"].push_back(std::move(t));
    prev = &rec;
  }
  flush();
  root["images"] = std::move(images);
  return root.dump(1) + "\n";
}

std::string slice_summary_json(const SliceSummary& s, const ClassMap& classes) {
  ordered_json j;
  j["images"] = s.images;
  j["tiles"] = s.tiles;
  j["positive_tiles"] = s.positive_tiles;
  j["background_tiles"] = s.background_tiles;
  j["positive_ratio"] = round6(s.positive_ratio);
  j["source_annotations"] = s.source_annotations;
  j["retained_annotations"] = s.retained_annotations;
  j["multi_tile_annotations"] = s.multi_tile_annotations;
  ordered_json per_class = ordered_json::object();
  for (std::size_t c = 0; c < s.per_class_retained.size(); ++c) {
    per_class[classes.name_of(static_cast<int>(c))] = s.per_class_retained[c];
  }
  j["per_class_retained"] = std::move(per_class);
  return j.dump(1) + "\n";
}

EmitReport emit_training_labels(const SliceResult& sliced, const Dataset& ds,
                                const SliceParams& params, const fs::path& out_dir,
                                const EmitOptions& opts) {
  EmitReport report;
  try {
    fs::create_directories(out_dir);
    write_text_file(out_dir / "classes.txt", format_class_file(ds.classes));
    write_text_file(out_dir / "tiles.json", tile_manifest_json(sliced, params));

    if (opts.format == LabelFormat::kYoloTxt) {
      for (const auto& rec : sliced.records) {
        std::vector<Annotation> anns;
        anns.reserve(rec.annotations.size());
        for (const auto& a : rec.annotations) anns.push_back({a.class_id, a.box});
        write_text_file(out_dir / "labels" / (rec.stem() + ".txt"),
                        format_yolo_labels(anns, rec.tile.width, rec.tile.height));
        ++report.label_files;
      }
    } else {
      write_text_file(out_dir / "tiles_coco.json", tiles_as_coco(sliced, ds, opts.crop_extension));
      report.label_files = 1;
    }

    if (opts.codec != nullptr) {
      std::map<std::string, bool> unreadable;
      for (const auto& rec : sliced.records) {
        if (unreadable.count(rec.file_name)) continue;
        const fs::path src = fs::path(ds.image_root) / rec.file_name;
        const fs::path dst = out_dir / "images" / (rec.stem() + opts.crop_extension);
        if (opts.codec->write_crop(src, rec.tile, dst)) {
          ++report.crops_written;
        } else {
          unreadable[rec.file_name] = true;
          report.unreadable_images.push_back(src.string());
        }
      }
    }
  } catch (const std::exception& e) {
    throw Error(std::string("writing tile dataset failed (partial output may remain in ") +
                out_dir.string() + "): " + e.what());
  }
  return report;
}

}  // namespace tatm

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

#include "tatm/reports.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "tatm/formats.hpp"

namespace tatm {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json num(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return round6(*v);
}

std::string cell(std::optional<double> v) { return v ? format_fixed6(*v) : std::string(); }
std::string md_cell(std::optional<double> v) { return v ? format_fixed6(*v) : std::string("-"); }

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string md_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string s = "|";
  for (const auto& h : header) s += " " + h + " |";
  s += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) s += i == 0 ? " --- |" : " ---: |";
  s += "\n";
  for (const auto& r : rows) {
    s += "|";
    for (const auto& c : r) s += " " + c + " |";
    s += "\n";
  }
  return s;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      s += '"';
      for (char c : f) {
        if (c == '"') s += '"';
        s += c;
      }
      s += '"';
    } else {
      s += f;
    }
  }
  return s + "\n";
}

ordered_json bins_json(const BinnedRecall& b, const std::string& unit) {
  ordered_json j;
  j["unit"] = unit;
  auto arr = ordered_json::array();
  for (const auto& bin : b.bins) {
    ordered_json o;
    o["label"] = bin.label;
    o["lo"] = round6(bin.lo);
    o["hi"] = std::isfinite(bin.hi) ? ordered_json(round6(bin.hi)) : ordered_json(nullptr);
    o["gt"] = bin.gt_count;
    o["recalled"] = bin.recalled;
    o["recall"] = num(bin.recall);
    arr.push_back(std::move(o));
  }
  j["bins"] = std::move(arr);
  j["unbinned"] = b.unbinned;
  return j;
}

ordered_json report_object(const EvalReport& r) {
  ordered_json j;
  j["images"] = r.images;
  j["gt_total"] = r.gt_total;
  j["map50"] = num(r.map50);
  j["precision"] = round6(r.at_conf.precision);
  j["recall"] = round6(r.at_conf.recall);
  j["tp"] = r.at_conf.tp;
  j["fp"] = r.at_conf.fp;
  j["fn"] = r.at_conf.fn;
  j["mean_ms_per_image"] = num(r.mean_ms_per_image);
  auto pc = ordered_json::array();
  for (const auto& c : r.per_class) {
    ordered_json o;
    o["class_id"] = c.class_id;
    o["name"] = c.name;
    o["gt"] = c.gt_count;
    o["predictions"] = c.pred_count;
    o["ap50"] = num(c.ap);
    pc.push_back(std::move(o));
  }
  j["per_class"] = std::move(pc);
  j["recall_by_area"] = bins_json(r.by_area, "px2");
  j["recall_by_boundary"] = bins_json(r.by_boundary, "px");
  return j;
}

std::string bin_header(const RecallBin& b) { return "recall " + b.label; }

ordered_json manifest_object(const RunManifest& m) {
  ordered_json j;
  j["dataset_id"] = m.dataset_id;
  j["strategy"] = m.strategy;
  j["params_hash"] = m.params_hash;
  j["backend_id"] = m.backend_id;
  ordered_json cfg = ordered_json::object();
  std::istringstream lines(m.effective_config);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    cfg[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = std::move(cfg);
  j["backend_calls"] = m.backend_calls();
  j["mean_ms_per_image"] = num(m.mean_ms_per_image());
  j["failed_images"] = m.failed_images();
  auto imgs = ordered_json::array();
  for (const auto& e : m.images) {
    ordered_json o;
    o["image_id"] = e.image_id;
    o["backend_calls"] = e.backend_calls;
    o["detections"] = e.detections;
    o["boosted"] = e.boosted;
    if (e.timing) {
      ordered_json t;
      t["tiling_ms"] = round6(e.timing->tiling_ms);
      t["detection_ms"] = round6(e.timing->detection_ms);
      t["merge_ms"] = round6(e.timing->merge_ms);
      t["total_ms"] = round6(e.timing->total_ms);
      o["timing"] = std::move(t);
    } else {
      o["timing"] = nullptr;
    }
    o["failure"] = e.failure ? ordered_json(*e.failure) : ordered_json(nullptr);
    imgs.push_back(std::move(o));
  }
  j["images"] = std::move(imgs);
  return j;
}

}  // namespace

std::string report_json(const EvalReport& r) { return dump(report_object(r)); }

std::string report_csv(const EvalReport& r) {
  std::string s = csv_line({"metric", "subject", "gt", "value"});
  s += csv_line({"map50", "all", std::to_string(r.gt_total), cell(r.map50)});
  s += csv_line({"precision", "all", std::to_string(r.gt_total), format_fixed6(r.at_conf.precision)});
  s += csv_line({"recall", "all", std::to_string(r.gt_total), format_fixed6(r.at_conf.recall)});
  for (const auto& c : r.per_class) {
    s += csv_line({"ap50", c.name, std::to_string(c.gt_count), cell(c.ap)});
  }
  for (const auto& b : r.by_area.bins) {
    s += csv_line({"recall_area", b.label, std::to_string(b.gt_count), cell(b.recall)});
  }
  for (const auto& b : r.by_boundary.bins) {
    s += csv_line({"recall_boundary", b.label, std::to_string(b.gt_count), cell(b.recall)});
  }
  s += csv_line({"mean_ms_per_image", "all", "", cell(r.mean_ms_per_image)});
  return s;
}

std::string report_md(const EvalReport& r, const std::string& title) {
  std::string s = "# " + title + "\n\n";
  s += md_table({"Images", "GT", "mAP@50", "Precision", "Recall", "ms/image"},
                {{std::to_string(r.images), std::to_string(r.gt_total), md_cell(r.map50),
                  format_fixed6(r.at_conf.precision), format_fixed6(r.at_conf.recall),
                  md_cell(r.mean_ms_per_image)}});
  s += "\n## Per-class AP@50\n\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : r.per_class) {
    rows.push_back({c.name, std::to_string(c.gt_count), std::to_string(c.pred_count), md_cell(c.ap)});
  }
  s += md_table({"Class", "GT", "Predictions", "AP@50"}, rows);
  for (const auto* part : {&r.by_area, &r.by_boundary}) {
    s += part == &r.by_area ? "\n## Recall by apparent area\n\n" : "\n## Recall by boundary distance\n\n";
    rows.clear();
    for (const auto& b : part->bins) {
      rows.push_back({b.label, std::to_string(b.gt_count), std::to_string(b.recalled), md_cell(b.recall)});
    }
    s += md_table({"Bin", "GT", "Recalled", "Recall"}, rows);
    if (part->unbinned > 0) s += "\n" + std::to_string(part->unbinned) + " GT below the first bin edge.\n";
  }
  return s;
}

void write_report(const EvalReport& r, const std::filesystem::path& dir) {
  write_text_file(dir / "report.json", report_json(r));
  write_text_file(dir / "report.csv", report_csv(r));
  write_text_file(dir / "report.md", report_md(r));
}

std::string manifest_json(const RunManifest& m) { return dump(manifest_object(m)); }

// ---------------------------------------------------------------------------

std::string comparison_json(const Comparison& c) {
  ordered_json j;
  j["dataset_id"] = c.dataset_id;
  auto rows = ordered_json::array();
  for (const auto& r : c.rows) {
    ordered_json o;
    o["strategy"] = r.strategy.name();
    o["label"] = r.strategy.label();
    o["report"] = report_object(r.report);
    o["backend_calls"] = r.manifest.backend_calls();
    o["failed_images"] = r.manifest.failed_images();
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return dump(j);
}

std::string comparison_csv(const Comparison& c) {
  std::string s = csv_line({"strategy", "label", "map50", "recall", "precision", "ms_per_image", "backend_calls",
                            "failed_images"});
  for (const auto& r : c.rows) {
    s += csv_line({r.strategy.name(), r.strategy.label(), cell(r.report.map50), format_fixed6(r.report.at_conf.recall),
                   format_fixed6(r.report.at_conf.precision), cell(r.report.mean_ms_per_image),
                   std::to_string(r.manifest.backend_calls()), std::to_string(r.manifest.failed_images().size())});
  }
  return s;
}

namespace {

std::string binned_csv(const Comparison& c, bool area) {
  std::vector<std::string> header{"strategy", "label"};
  if (!c.rows.empty()) {
    const auto& bins = area ? c.rows.front().report.by_area.bins : c.rows.front().report.by_boundary.bins;
    for (const auto& b : bins) {
      header.push_back(bin_header(b));
      header.push_back("gt " + b.label);
    }
  }
  std::string s = csv_line(header);
  for (const auto& r : c.rows) {
    std::vector<std::string> f{r.strategy.name(), r.strategy.label()};
    for (const auto& b : area ? r.report.by_area.bins : r.report.by_boundary.bins) {
      f.push_back(cell(b.recall));
      f.push_back(std::to_string(b.gt_count));
    }
    s += csv_line(f);
  }
  return s;
}

std::string binned_md(const Comparison& c, bool area) {
  std::vector<std::string> header{"Method"};
  if (!c.rows.empty()) {
    for (const auto& b : area ? c.rows.front().report.by_area.bins : c.rows.front().report.by_boundary.bins) {
      header.push_back(b.label + " (n=" + std::to_string(b.gt_count) + ")");
    }
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : c.rows) {
    std::vector<std::string> f{r.strategy.label()};
    for (const auto& b : area ? r.report.by_area.bins : r.report.by_boundary.bins) f.push_back(md_cell(b.recall));
    rows.push_back(std::move(f));
  }
  return md_table(header, rows);
}

}  // namespace

std::string comparison_size_csv(const Comparison& c) { return binned_csv(c, true); }
std::string comparison_boundary_csv(const Comparison& c) { return binned_csv(c, false); }

std::string comparison_md(const Comparison& c) {
  std::string s = "# Strategy comparison: " + c.dataset_id + "\n\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : c.rows) {
    rows.push_back({r.strategy.label(), md_cell(r.report.map50), format_fixed6(r.report.at_conf.recall),
                    format_fixed6(r.report.at_conf.precision), md_cell(r.report.mean_ms_per_image)});
  }
  s += md_table({"Method", "mAP@50", "Recall", "Precision", "ms/image"}, rows);
  s += "\n## Recall by apparent area at 640 input\n\n" + binned_md(c, true);
  s += "\n## Recall by distance to the nearest tile boundary\n\n" + binned_md(c, false);
  return s;
}

void write_comparison(const Comparison& c, const std::filesystem::path& dir) {
  write_text_file(dir / "compare.json", comparison_json(c));
  write_text_file(dir / "compare.csv", comparison_csv(c));
  write_text_file(dir / "compare_size.csv", comparison_size_csv(c));
  write_text_file(dir / "compare_boundary.csv", comparison_boundary_csv(c));
  write_text_file(dir / "compare.md", comparison_md(c));
}

// ---------------------------------------------------------------------------

namespace {

std::string sweep_setting(const SweepRow& r) {
  if (!r.tau) return "Overlap + NMS";
  return "tau=" + format_fixed6(*r.tau) + " lambda=" + format_fixed6(*r.lambda);
}

}  // namespace

std::string sweep_json(const Sweep& s) {
  ordered_json j;
  j["dataset_id"] = s.dataset_id;
  auto rows = ordered_json::array();
  for (const auto& r : s.rows) {
    ordered_json o;
    o["tau"] = num(r.tau);
    o["lambda"] = num(r.lambda);
    o["map50"] = num(r.map50);
    o["recall"] = round6(r.recall);
    o["boundary_recall"] = num(r.boundary_recall);
    o["boosted"] = r.boosted;
    o["boosted_per_image"] = round6(r.boosted_per_image);
    o["boundary_sensitive"] = r.boundary_sensitive;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return dump(j);
}

std::string sweep_csv(const Sweep& s) {
  std::string out = csv_line({"tau", "lambda", "map50", "recall", "boundary_recall", "boosted", "boosted_per_image",
                              "boundary_sensitive"});
  for (const auto& r : s.rows) {
    out += csv_line({cell(r.tau), cell(r.lambda), cell(r.map50), format_fixed6(r.recall), cell(r.boundary_recall),
                     std::to_string(r.boosted), format_fixed6(r.boosted_per_image),
                     std::to_string(r.boundary_sensitive)});
  }
  return out;
}

std::string sweep_md(const Sweep& s) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : s.rows) {
    rows.push_back({sweep_setting(r), md_cell(r.map50), format_fixed6(r.recall), md_cell(r.boundary_recall),
                    r.tau ? std::to_string(r.boosted) : std::string("-")});
  }
  return "# TA-TM parameter sweep: " + s.dataset_id + "\n\n" +
         md_table({"Setting", "mAP@50", "Recall", "Boundary recall (0-16 px)", "Score-boosted"}, rows);
}

void write_sweep(const Sweep& s, const std::filesystem::path& dir) {
  write_text_file(dir / "sweep.json", sweep_json(s));
  write_text_file(dir / "sweep.csv", sweep_csv(s));
  write_text_file(dir / "sweep.md", sweep_md(s));
}

// ---------------------------------------------------------------------------

namespace {

ordered_json distribution_json(const AreaDistribution& d) {
  ordered_json j;
  j["input_size"] = d.input_size == 0 ? ordered_json(nullptr) : ordered_json(d.input_size);
  j["count"] = d.count;
  j["median"] = round6(d.median);
  j["fraction_below_64"] = round6(d.fraction_below_64);
  auto hist = ordered_json::array();
  for (std::size_t i = 0; i < d.histogram.size(); ++i) {
    ordered_json o;
    o["lo"] = round6(d.histogram_edges[i]);
    o["hi"] = i + 1 < d.histogram_edges.size() ? ordered_json(round6(d.histogram_edges[i + 1])) : ordered_json(nullptr);
    o["count"] = d.histogram[i];
    hist.push_back(std::move(o));
  }
  j["histogram"] = std::move(hist);
  auto cdf = ordered_json::array();
  for (const auto& [t, f] : d.cdf) cdf.push_back({{"threshold", round6(t)}, {"fraction_below", round6(f)}});
  j["cdf"] = std::move(cdf);
  return j;
}

}  // namespace

std::string collapse_json(const ResolutionCollapseReport& r) {
  ordered_json j;
  j["native"] = distribution_json(r.native);
  auto per = ordered_json::array();
  for (const auto& d : r.per_input) per.push_back(distribution_json(d));
  j["per_input"] = std::move(per);
  return dump(j);
}

std::string collapse_md(const ResolutionCollapseReport& r) {
  std::vector<std::string> header{"Input", "Boxes", "Median area (px²)"};
  if (!r.native.cdf.empty()) {
    for (const auto& [t, f] : r.native.cdf) header.push_back("< " + format_fixed6(t).substr(0, format_fixed6(t).find('.')) + " px²");
  }
  std::vector<std::vector<std::string>> rows;
  auto row = [&](const AreaDistribution& d) {
    std::vector<std::string> f{d.input_size == 0 ? std::string("native") : std::to_string(d.input_size),
                               std::to_string(d.count), format_fixed6(d.median)};
    for (const auto& [t, frac] : d.cdf) f.push_back(format_fixed6(frac));
    rows.push_back(std::move(f));
  };
  row(r.native);
  for (const auto& d : r.per_input) row(d);
  return "# Apparent-area distribution\n\n" + md_table(header, rows);
}

std::string dataset_stats_json(const DatasetStats& s, const ClassMap& classes) {
  ordered_json j;
  j["images"] = s.images;
  j["annotations"] = s.annotations;
  j["annotations_per_image"] = round6(s.annotations_per_image);
  j["width"] = {{"min", s.min_width}, {"median", round6(s.median_width)}, {"max", s.max_width}};
  j["height"] = {{"min", s.min_height}, {"median", round6(s.median_height)}, {"max", s.max_height}};
  j["min_box_area"] = round6(s.min_box_area);
  j["median_box_area"] = round6(s.median_box_area);
  j["input_size"] = s.input_size;
  j["small_threshold"] = round6(s.small_threshold);
  j["boxes_below_small_threshold"] = s.boxes_below_small_threshold;
  ordered_json pc = ordered_json::object();
  for (std::size_t i = 0; i < s.per_class.size(); ++i) pc[classes.name_of(static_cast<int>(i))] = s.per_class[i];
  j["per_class"] = std::move(pc);
  return dump(j);
}

std::string dataset_stats_md(const DatasetStats& s, const ClassMap& classes) {
  std::string out = "# Dataset statistics\n\n";
  out += md_table({"Images", "Annotations", "Per image", "Median size", "Median box area (px²)",
                   "Below " + format_fixed6(s.small_threshold) + " px² at " + std::to_string(s.input_size)},
                  {{std::to_string(s.images), std::to_string(s.annotations), format_fixed6(s.annotations_per_image),
                    format_fixed6(s.median_width) + " x " + format_fixed6(s.median_height),
                    format_fixed6(s.median_box_area),
                    std::to_string(s.boxes_below_small_threshold) + " / " + std::to_string(s.annotations)}});
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.per_class.size(); ++i) {
    rows.push_back({classes.name_of(static_cast<int>(i)), std::to_string(s.per_class[i])});
  }
  out += "\n" + md_table({"Class", "Annotations"}, rows);
  return out;
}

}  // namespace tatm

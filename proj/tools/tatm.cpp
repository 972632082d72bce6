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

// tatm: command-line front end.
//
//   tatm plan     --width W --height H             grid manifest
//   tatm slice    --coco F --out DIR               training tiles + labels
//   tatm run      --coco F --strategy S --out DIR  detections + manifest
//   tatm merge    --in F --mode nms|tatm --out F   re-merge raw detections
//   tatm eval     --detections F --coco F --out D  report.{json,csv,md}
//   tatm compare  --coco F --out DIR               compare.{json,csv,md}, ...
//   tatm sweep    --coco F --out DIR               sweep.{json,csv,md}
//   tatm synth    --scenario F --out DIR           synthetic COCO dataset
//
// Failures print one line, "error: <kind>: <message>", to stderr. Exit code 2
// means the invocation itself was wrong; 1 means it failed while running.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "tatm/tatm.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags that map one-to-one onto config keys. Values are kept as strings and
// handed to Config::set so file and flag parsing share one validator.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::map<std::string, std::string> values;
  bool filter_after_adjust = false;
  CLI::Option* filter_flag = nullptr;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, values[key], help));
  }

  tatm::Config build() const {
    tatm::Config cfg = config_path.empty() ? tatm::Config{} : tatm::load_config(config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
    if (filter_flag != nullptr && filter_flag->count() > 0) cfg.set("filter_after_adjust", "true");
    cfg.validate();
    return cfg;
  }
};

void add_grid_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config_path, "flat key = value config file")->check(CLI::ExistingFile);
  f.add(app, "--tile-size", "tile_size", "tile side in px (640)");
  f.add(app, "--stride", "stride", "tile stride in px (512)");
}

void add_merge_flags(CLI::App* app, ConfigFlags& f) {
  f.add(app, "--conf", "conf", "confidence threshold (0.25)");
  f.add(app, "--nms-iou", "nms_iou", "NMS IoU threshold (0.45)");
  f.add(app, "--tau", "tau", "boundary-sensitivity distance in px (16)");
  f.add(app, "--lambda", "lambda", "agreement weight (0.2)");
  f.add(app, "--mu", "mu", "edge-continuity weight; only 0 is supported");
  f.filter_flag = app->add_flag("--filter-after-adjust", f.filter_after_adjust,
                                "apply the confidence threshold after score adjustment");
}

void add_eval_flags(CLI::App* app, ConfigFlags& f) {
  f.add(app, "--input-full", "input_full", "comma-separated full-image input sizes (640,1280)");
}

void add_backend_flags(CLI::App* app, ConfigFlags& f) {
  f.add(app, "--backend", "backend.kind", "precomputed | subprocess | sim");
  f.add(app, "--backend-cmd", "backend.cmd", "command line for the subprocess backend");
  f.add(app, "--backend-dir", "backend.dir", "directory of precomputed detection files");
  f.add(app, "--backend-sim", "backend.sim", "simulated-detector parameter file (JSON)");
  f.add(app, "--seed", "seed", "seed recorded with the run (42)");
}

struct DatasetFlags {
  std::string coco;
  std::string yolo_labels;
  std::string images_meta;
  std::string image_root;
  bool strict = false;

  void add(CLI::App* app, ConfigFlags& cfg) {
    app->add_option("--coco", coco, "COCO annotation file")->check(CLI::ExistingFile);
    app->add_option("--yolo-labels", yolo_labels, "directory of YOLO label files")->check(CLI::ExistingDirectory);
    app->add_option("--images-meta", images_meta, "CSV of file_name,width,height for YOLO input")
        ->check(CLI::ExistingFile);
    cfg.add(app, "--classes-file", "classes_file", "class names, one per line");
    app->add_option("--image-root", image_root, "directory image file names are relative to");
    app->add_flag("--strict", strict, "abort on the first malformed annotation record");
  }

  void check() const {
    if (coco.empty() == yolo_labels.empty()) {
      throw UsageError("give exactly one of --coco or --yolo-labels");
    }
    if (!yolo_labels.empty() && images_meta.empty()) {
      throw UsageError("--yolo-labels needs --images-meta");
    }
  }

  tatm::Dataset load(const tatm::Config& cfg) const {
    tatm::Dataset ds;
    if (!coco.empty()) {
      auto r = tatm::read_coco(coco, strict);
      for (const auto& e : r.errors) std::cerr << "warning: " << coco << ": " << e.where << ": " << e.message << "\n";
      ds = std::move(r.dataset);
    } else {
      if (cfg.classes_file.empty()) throw tatm::ConfigError("YOLO input needs --classes-file");
      const auto meta = tatm::read_image_meta_csv(images_meta);
      ds = tatm::read_yolo(yolo_labels, meta, cfg.classes_file);
    }
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
    if (!image_root.empty()) ds.image_root = image_root;
    return ds;
  }
};

struct RunFlags {
  unsigned jobs = 0;
  bool no_timing = false;

  void add(CLI::App* app) {
    app->add_option("--jobs,-j", jobs, "worker threads (default: all cores)");
    app->add_flag("--no-timing", no_timing, "omit wall-clock timings so reports are byte-reproducible");
  }
  tatm::RunOptions options() const { return {jobs, !no_timing}; }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
}

std::vector<tatm::DetectionRecord> raw_records(const tatm::RunResult& run, const tatm::ClassMap& classes) {
  std::vector<tatm::DetectionRecord> out;
  for (const auto& img : run.images) {
    if (img.failure) continue;
    for (const auto& d : img.raw) {
      const tatm::TileSpec* spec = (d.tile && img.grid) ? img.grid->find(*d.tile) : nullptr;
      out.push_back(tatm::to_record(d, img.image_id, run.strategy.name(), spec, classes));
    }
  }
  return out;
}

void report_failures(const tatm::RunManifest& m) {
  for (const auto& e : m.images) {
    if (e.failure) std::cerr << "warning: image " << e.image_id << " failed and is excluded: " << *e.failure << "\n";
  }
}

// ---------------------------------------------------------------------------

int cmd_plan(int width, int height, const DatasetFlags& data, const ConfigFlags& flags, const std::string& out) {
  const tatm::Config cfg = flags.build();
  const bool dims = width > 0 || height > 0;
  if (dims == (!data.coco.empty() || !data.yolo_labels.empty())) {
    throw UsageError("give either --width/--height or a dataset");
  }
  if (dims) {
    if (width <= 0 || height <= 0) throw UsageError("--width and --height must both be positive");
    const auto grid = tatm::plan_grid(width, height, cfg.tile_size, cfg.stride);
    const std::string text = tatm::grid_manifest_json(grid, "image");
    if (out.empty() || out == "-") {
      std::cout << text;
    } else {
      tatm::write_text_file(out, text);
    }
    return 0;
  }
  data.check();
  if (out.empty()) throw UsageError("--out DIR is required when planning a dataset");
  const tatm::Dataset ds = data.load(cfg);
  for (const auto& img : ds.images) {
    const auto grid = tatm::plan_grid(img.width, img.height, cfg.tile_size, cfg.stride);
    tatm::write_text_file(fs::path(out) / (img.image_id + ".grid.json"), tatm::grid_manifest_json(grid, img.image_id));
  }
  return 0;
}

struct SliceArgs {
  std::string out;
  std::string format = "yolo-txt";
  std::string split = "all";
  std::uint64_t split_seed = 42;
  double train_fraction = 0.7;
  double val_fraction = 0.15;
  double min_visibility = 0.4;
  bool crops = false;
};

int cmd_slice(const SliceArgs& a, const DatasetFlags& data, const ConfigFlags& flags, const RunFlags& run) {
  const tatm::Config cfg = flags.build();
  data.check();
  const auto format = tatm::parse_label_format(a.format);
  if (a.split != "all" && a.split != "train" && a.split != "val" && a.split != "test") {
    throw UsageError("--split must be all, train, val or test");
  }
  tatm::SliceParams params{cfg.tile_size, cfg.stride, a.min_visibility};
  params.validate();

  tatm::Dataset ds = data.load(cfg);
  if (a.split != "all") {
    const auto parts = tatm::split_dataset(ds.images.size(), a.train_fraction, a.val_fraction, a.split_seed);
    const auto& keep = a.split == "train" ? parts.train : a.split == "val" ? parts.val : parts.test;
    std::vector<tatm::AnnotatedImage> chosen;
    for (std::size_t i : keep) chosen.push_back(ds.images[i]);
    ds.images = std::move(chosen);
  }
  const auto sliced = tatm::slice_dataset(ds, params, run.jobs);
  std::unique_ptr<tatm::ImageCodec> codec;
  if (a.crops) {
    codec = tatm::make_image_codec();
    if (!codec) throw tatm::ConfigError("--crops needs a build with image support (TATM_WITH_OPENCV)");
  }
  tatm::EmitOptions eo;
  eo.format = format;
  eo.codec = codec.get();
  const auto rep = tatm::emit_training_labels(sliced, ds, params, a.out, eo);
  for (const auto& bad : rep.unreadable_images) std::cerr << "warning: could not read image " << bad << "\n";
  const fs::path out(a.out);
  tatm::write_text_file(out / "summary.json", tatm::slice_summary_json(sliced.summary, ds.classes));
  const auto stats = tatm::compute_dataset_stats(ds);
  tatm::write_text_file(out / "stats.json", tatm::dataset_stats_json(stats, ds.classes));
  tatm::write_text_file(out / "stats.md", tatm::dataset_stats_md(stats, ds.classes));
  return 0;
}

int cmd_run(const std::string& strategy_name, const std::string& out, bool raw, const DatasetFlags& data,
            const ConfigFlags& flags, const RunFlags& run) {
  const tatm::Config cfg = flags.build();
  data.check();
  const tatm::Strategy strategy = tatm::parse_strategy(strategy_name, cfg);
  const tatm::Dataset ds = data.load(cfg);
  auto backend = tatm::make_backend(cfg.backend);
  const tatm::RunResult result = tatm::run_strategy(ds, strategy, *backend, cfg, run.options());
  report_failures(result.manifest);
  const fs::path dir(out);
  tatm::write_detections(dir / "detections.jsonl", result.records(ds.classes));
  if (raw) tatm::write_detections(dir / "raw.jsonl", raw_records(result, ds.classes));
  tatm::write_text_file(dir / "manifest.json", tatm::manifest_json(result.manifest));
  return 0;
}

// Rebuilds the (possibly partial) tile grid of one image from its records.
tatm::TileGrid grid_from_records(const std::vector<tatm::DetectionRecord>& recs) {
  std::map<tatm::TileIndex, tatm::TileSpec> tiles;
  for (const auto& r : recs) {
    if (!r.tile) continue;
    const auto [it, fresh] = tiles.emplace(r.tile->index(), *r.tile);
    if (!fresh && !(it->second == *r.tile)) {
      throw tatm::FormatError("image " + r.image_id + ": conflicting geometry for tile (" +
                              std::to_string(r.tile->row) + ", " + std::to_string(r.tile->col) + ")");
    }
  }
  tatm::TileGrid g;
  for (const auto& [idx, t] : tiles) {
    g.rows = std::max(g.rows, idx.row + 1);
    g.cols = std::max(g.cols, idx.col + 1);
    g.image_w = std::max(g.image_w, t.x0 + t.width);
    g.image_h = std::max(g.image_h, t.y0 + t.height);
    g.tile_size = std::max({g.tile_size, t.width, t.height});
    g.tiles.push_back(t);
  }
  return g;
}

int cmd_merge(const std::vector<std::string>& inputs, const std::string& mode, const std::string& out,
              bool keep_provenance, const ConfigFlags& flags) {
  const tatm::Config cfg = flags.build();
  if (mode != "nms" && mode != "tatm") throw UsageError("--mode must be nms or tatm");
  const tatm::MergeParams params = cfg.merge_params();

  std::map<std::string, std::vector<tatm::DetectionRecord>> by_image;
  std::vector<std::string> order;
  for (const auto& in : inputs) {
    for (auto& r : tatm::read_detections(fs::path(in))) {
      auto [it, fresh] = by_image.try_emplace(r.image_id);
      if (fresh) order.push_back(r.image_id);
      it->second.push_back(std::move(r));
    }
  }
  std::vector<tatm::DetectionRecord> merged;
  for (const auto& image_id : order) {
    const auto& recs = by_image[image_id];
    const tatm::TileGrid grid = grid_from_records(recs);
    std::vector<tatm::Detection> dets;
    dets.reserve(recs.size());
    for (const auto& r : recs) {
      tatm::Detection d = tatm::from_record(r);
      d.boundary_distance.reset();
      d.agreement.reset();
      d.adjusted_score.reset();
      dets.push_back(d);
    }
    std::vector<tatm::Detection> kept;
    if (mode == "tatm") {
      kept = tatm::ta_tm_merge(dets, grid, params, cfg.filter_after_adjust).detections;
    } else {
      kept = tatm::plain_merge(dets, &grid, params);
    }
    const std::string tag = recs.front().strategy;
    std::map<int, std::string> names;
    for (const auto& r : recs) names.try_emplace(r.class_id, r.class_name);
    for (auto d : kept) {
      if (!keep_provenance) {
        d.score = d.confidence();
        d.boundary_distance.reset();
        d.agreement.reset();
        d.adjusted_score.reset();
      }
      const tatm::TileSpec* spec = d.tile ? grid.find(*d.tile) : nullptr;
      tatm::DetectionRecord rec = tatm::to_record(d, image_id, tag, spec, tatm::ClassMap{});
      rec.class_name = names[d.class_id];
      merged.push_back(std::move(rec));
    }
  }
  tatm::write_detections(fs::path(out), merged);
  return 0;
}

int cmd_eval(const std::string& detections, const std::string& out, const std::string& aliases_path,
             const DatasetFlags& data, const ConfigFlags& flags) {
  const tatm::Config cfg = flags.build();
  data.check();
  tatm::Dataset ds = data.load(cfg);
  if (!cfg.classes_file.empty() && !data.coco.empty()) {
    tatm::ClassMap target;
    target.names = tatm::read_class_file(cfg.classes_file);
    const tatm::ClassAliases aliases = aliases_path.empty() ? tatm::ClassAliases{} : tatm::read_class_aliases(aliases_path);
    tatm::remap_classes(ds, target, aliases);
  } else if (!aliases_path.empty()) {
    throw UsageError("--aliases needs --classes-file naming the detector's classes");
  }
  tatm::PredictionsByImage preds;
  for (const auto& img : ds.images) preds[img.image_id];
  for (const auto& r : tatm::read_detections(fs::path(detections))) {
    if (ds.find(r.image_id) == nullptr) {
      std::cerr << "warning: detections for unknown image " << r.image_id << " ignored\n";
      continue;
    }
    preds[r.image_id].push_back({r.class_id, r.adjusted_score.value_or(r.score), r.box_global});
  }
  const tatm::EvalReport report = tatm::evaluate(ds, preds, tatm::eval_options(cfg));
  const fs::path dir(out);
  tatm::write_report(report, dir);
  std::vector<int> sizes = cfg.input_full;
  const auto collapse = tatm::resolution_collapse_report(ds, sizes);
  tatm::write_text_file(dir / "collapse.json", tatm::collapse_json(collapse));
  tatm::write_text_file(dir / "collapse.md", tatm::collapse_md(collapse));
  return 0;
}

int cmd_compare(const std::string& strategies, const std::string& out, const DatasetFlags& data,
                const ConfigFlags& flags, const RunFlags& run) {
  const tatm::Config cfg = flags.build();
  data.check();
  std::vector<tatm::Strategy> list;
  if (strategies.empty()) {
    list = tatm::default_strategies(cfg);
  } else {
    for (const auto& name : split_list(strategies)) list.push_back(tatm::parse_strategy(name, cfg));
  }
  if (list.empty()) throw UsageError("--strategies is empty");
  const tatm::Dataset ds = data.load(cfg);
  auto backend = tatm::make_backend(cfg.backend);
  const tatm::Comparison cmp = tatm::compare_strategies(ds, list, *backend, cfg, run.options());
  const fs::path dir(out);
  tatm::write_comparison(cmp, dir);
  for (const auto& row : cmp.rows) {
    report_failures(row.manifest);
    tatm::write_text_file(dir / "manifests" / (row.strategy.name() + ".json"), tatm::manifest_json(row.manifest));
  }
  return 0;
}

int cmd_sweep(const std::string& settings, const std::string& taus, const std::string& lambdas,
              const std::string& out, const DatasetFlags& data, const ConfigFlags& flags, const RunFlags& run) {
  const tatm::Config cfg = flags.build();
  data.check();
  std::vector<tatm::TaTmSetting> grid;
  if (!taus.empty() || !lambdas.empty()) {
    if (taus.empty() || lambdas.empty()) throw UsageError("--taus and --lambdas go together");
    if (!settings.empty()) throw UsageError("use either --settings or --taus/--lambdas");
    std::vector<double> t, l;
    for (const auto& s : split_list(taus)) t.push_back(parse_double(s, "--taus"));
    for (const auto& s : split_list(lambdas)) l.push_back(parse_double(s, "--lambdas"));
    grid = tatm::sweep_grid(t, l);
  } else {
    for (const auto& pair : split_list(settings.empty() ? "16:0.2,32:0.4" : settings)) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) throw UsageError("--settings entries look like tau:lambda");
      grid.push_back({parse_double(pair.substr(0, colon), "--settings"),
                      parse_double(pair.substr(colon + 1), "--settings")});
    }
  }
  const tatm::Dataset ds = data.load(cfg);
  auto backend = tatm::make_backend(cfg.backend);
  const tatm::Sweep sw = tatm::sweep_tatm_params(ds, *backend, cfg, grid, run.options());
  tatm::write_sweep(sw, out);
  return 0;
}

int cmd_synth(const std::string& scenario, const std::string& out, bool render) {
  const tatm::ScenarioSpec spec = tatm::load_scenario(scenario);
  std::unique_ptr<tatm::ImageCodec> codec;
  if (render) {
    codec = tatm::make_image_codec();
    if (!codec) throw tatm::ConfigError("--render needs a build with image support (TATM_WITH_OPENCV)");
  }
  tatm::Dataset ds = tatm::generate_scenario(spec);
  const fs::path dir(out);
  tatm::write_coco(ds, dir / "annotations.json");
  if (codec) {
    for (const auto& img : ds.images) codec->render_board(img, dir / img.file_name, spec.seed);
  }
  const auto stats = tatm::compute_dataset_stats(ds);
  tatm::write_text_file(dir / "stats.json", tatm::dataset_stats_json(stats, ds.classes));
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::cerr << "error: " << kind << ": " << one_line(msg) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiled detection toolkit: slicing, tiled inference, topology-aware merging and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tatm " TATM_VERSION);

  DatasetFlags data;
  ConfigFlags flags;
  RunFlags run;
  std::function<int()> action;

  // plan
  auto* plan = app.add_subcommand("plan", "write the tile-grid manifest for an image size or a dataset");
  int plan_w = 0, plan_h = 0;
  std::string plan_out;
  plan->add_option("--width", plan_w, "image width in px");
  plan->add_option("--height", plan_h, "image height in px");
  plan->add_option("--out,-o", plan_out, "output file (single image, default stdout) or directory (dataset)");
  add_grid_flags(plan, flags);
  data.add(plan, flags);
  plan->callback([&] { action = [&] { return cmd_plan(plan_w, plan_h, data, flags, plan_out); }; });

  // slice
  auto* slice = app.add_subcommand("slice", "cut a dataset into training tiles with clipped labels");
  SliceArgs sa;
  slice->add_option("--out,-o", sa.out, "output directory")->required();
  slice->add_option("--format", sa.format, "yolo-txt | coco-json")->capture_default_str();
  slice->add_option("--split", sa.split, "all | train | val | test")->capture_default_str();
  slice->add_option("--split-seed", sa.split_seed, "seed for the train/val/test shuffle")->capture_default_str();
  slice->add_option("--train-fraction", sa.train_fraction)->capture_default_str();
  slice->add_option("--val-fraction", sa.val_fraction)->capture_default_str();
  slice->add_option("--min-visibility", sa.min_visibility, "minimum retained visible fraction")->capture_default_str();
  slice->add_flag("--crops", sa.crops, "also write tile image crops");
  add_grid_flags(slice, flags);
  data.add(slice, flags);
  run.add(slice);
  slice->callback([&] { action = [&] { return cmd_slice(sa, data, flags, run); }; });

  // run
  auto* runc = app.add_subcommand("run", "run one inference strategy and write merged detections");
  std::string strategy = "tile-overlap-tatm", run_out;
  bool keep_raw = false;
  runc->add_option("--strategy,-s", strategy,
                   "full-640 | full-1280 | tile-nms | tile-overlap-nms | tile-overlap-tatm")
      ->capture_default_str();
  runc->add_option("--out,-o", run_out, "output directory")->required();
  runc->add_flag("--raw", keep_raw, "also write unmerged detections to raw.jsonl");
  add_grid_flags(runc, flags);
  add_merge_flags(runc, flags);
  add_backend_flags(runc, flags);
  data.add(runc, flags);
  run.add(runc);
  runc->callback([&] { action = [&] { return cmd_run(strategy, run_out, keep_raw, data, flags, run); }; });

  // merge
  auto* merge = app.add_subcommand("merge", "merge per-tile detections with class-aware NMS or TA-TM");
  std::vector<std::string> merge_in;
  std::string merge_mode = "tatm", merge_out;
  bool keep_provenance = false;
  merge->add_option("--in,-i", merge_in, "detection files (JSON lines)")->required()->check(CLI::ExistingFile);
  merge->add_option("--mode", merge_mode, "nms | tatm")->capture_default_str();
  merge->add_option("--out,-o", merge_out, "output detection file")->required();
  merge->add_flag("--keep-provenance", keep_provenance,
                  "keep original scores plus boundary distance, agreement and adjusted score");
  merge->add_option("--config", flags.config_path, "flat key = value config file")->check(CLI::ExistingFile);
  add_merge_flags(merge, flags);
  merge->callback([&] {
    action = [&] { return cmd_merge(merge_in, merge_mode, merge_out, keep_provenance, flags); };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score detections against ground truth");
  std::string eval_det, eval_out, eval_aliases;
  eval->add_option("--detections,-d", eval_det, "detection file (JSON lines)")->required()->check(CLI::ExistingFile);
  eval->add_option("--out,-o", eval_out, "output directory")->required();
  eval->add_option("--aliases", eval_aliases, "class alias file, one name=target per line")->check(CLI::ExistingFile);
  add_grid_flags(eval, flags);
  flags.add(eval, "--conf", "conf", "operating confidence threshold (0.25)");
  add_eval_flags(eval, flags);
  data.add(eval, flags);
  eval->callback([&] { action = [&] { return cmd_eval(eval_det, eval_out, eval_aliases, data, flags); }; });

  // compare
  auto* compare = app.add_subcommand("compare", "run several strategies with one backend and tabulate them");
  std::string strategies, cmp_out;
  compare->add_option("--strategies", strategies, "comma-separated strategy names (default: all five)");
  compare->add_option("--out,-o", cmp_out, "output directory")->required();
  add_grid_flags(compare, flags);
  add_merge_flags(compare, flags);
  add_eval_flags(compare, flags);
  add_backend_flags(compare, flags);
  data.add(compare, flags);
  run.add(compare);
  compare->callback([&] { action = [&] { return cmd_compare(strategies, cmp_out, data, flags, run); }; });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "TA-TM parameter sweep over fixed detections");
  std::string settings, taus, lambdas, sweep_out;
  sweep->add_option("--settings", settings, "tau:lambda pairs (default 16:0.2,32:0.4)");
  sweep->add_option("--taus", taus, "comma-separated tau values (grid with --lambdas)");
  sweep->add_option("--lambdas", lambdas, "comma-separated lambda values");
  sweep->add_option("--out,-o", sweep_out, "output directory")->required();
  add_grid_flags(sweep, flags);
  add_merge_flags(sweep, flags);
  add_eval_flags(sweep, flags);
  add_backend_flags(sweep, flags);
  data.add(sweep, flags);
  run.add(sweep);
  sweep->callback([&] {
    action = [&] { return cmd_sweep(settings, taus, lambdas, sweep_out, data, flags, run); };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset from a scenario file");
  std::string scenario, synth_out;
  bool render = false;
  synth->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out,-o", synth_out, "output directory")->required();
  synth->add_flag("--render", render, "also draw board images");
  synth->callback([&] { action = [&] { return cmd_synth(scenario, synth_out, render); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    return action();
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const tatm::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const tatm::FormatError& e) {
    return fail("format", e.what(), 1);
  } catch (const tatm::GeometryError& e) {
    return fail("geometry", e.what(), 1);
  } catch (const tatm::BackendError& e) {
    return fail("backend", e.what(), 1);
  } catch (const tatm::Error& e) {
    return fail("error", e.what(), 1);
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}

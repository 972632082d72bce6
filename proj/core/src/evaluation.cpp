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

#include "tatm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "tatm/tiling.hpp"

namespace tatm {

std::size_t MatchResult::true_positives() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(pred_to_gt.begin(), pred_to_gt.end(), [](const auto& m) { return m.has_value(); }));
}

std::size_t MatchResult::false_negatives() const noexcept {
  return static_cast<std::size_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
}

MatchResult greedy_match(std::span<const ScoredBox> preds, std::span<const Box> gts,
                         double iou_thresh) {
  MatchResult r;
  r.pred_to_gt.assign(preds.size(), std::nullopt);
  r.gt_matched.assign(gts.size(), false);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  for (std::size_t p : order) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[g]) continue;
      const double v = iou(preds[p].box, gts[g]);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best) {
      r.gt_matched[*best] = true;
      r.pred_to_gt[p] = best;
    }
  }
  return r;
}

std::optional<double> average_precision(std::span<const RankedOutcome> outcomes,
                                        std::size_t num_gt) {
  if (num_gt == 0) return std::nullopt;
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return outcomes[a].score > outcomes[b].score;
  });
  std::vector<double> precision(order.size());
  std::vector<double> recall(order.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (outcomes[order[i]].true_positive) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

std::optional<double> mean_ap(std::span<const std::optional<double>> per_class_ap) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ap : per_class_ap) {
    if (!ap) continue;
    sum += *ap;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

PrecisionRecall make_precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  PrecisionRecall pr;
  pr.tp = tp;
  pr.fp = fp;
  pr.fn = fn;
  pr.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  pr.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return pr;
}

GroundTruthImage build_ground_truth(const AnnotatedImage& img, int input_size, int reference_tile,
                                    int reference_stride) {
  GroundTruthImage out;
  out.image_id = img.image_id;
  out.width = img.width;
  out.height = img.height;
  const int stride = reference_stride > 0 ? reference_stride : reference_tile;
  const BoundaryLines lines =
      interior_boundary_lines(plan_grid(img.width, img.height, reference_tile, stride));
  out.entries.reserve(img.annotations.size());
  for (const auto& a : img.annotations) {
    GroundTruthEntry e;
    e.class_id = a.class_id;
    e.box = a.box;
    e.area_native = a.box.area();
    e.apparent_area = apparent_area(a.box, img.width, img.height, input_size);
    e.center = {a.box.center_x(), a.box.center_y()};
    e.boundary_distance = nearest_grid_boundary_distance(e.center, lines);
    out.entries.push_back(e);
  }
  return out;
}

std::optional<std::size_t> bin_index(const BinSpec& spec, double value) noexcept {
  if (spec.edges.empty() || value < spec.edges.front()) return std::nullopt;
  auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), value);
  return static_cast<std::size_t>(it - spec.edges.begin()) - 1;
}

namespace {

std::string format_edge(double v) {
  if (std::floor(v) == v) return std::to_string(static_cast<long long>(v));
  return std::to_string(v);
}

void finish_bins(BinnedRecall& b) {
  for (auto& bin : b.bins) {
    if (bin.gt_count > 0) {
      bin.recall = static_cast<double>(bin.recalled) / static_cast<double>(bin.gt_count);
    }
  }
}

}  // namespace

std::vector<RecallBin> make_bins(const BinSpec& spec) {
  std::vector<RecallBin> bins;
  for (std::size_t i = 0; i < spec.edges.size(); ++i) {
    RecallBin b;
    b.lo = spec.edges[i];
    if (i + 1 < spec.edges.size()) {
      b.hi = spec.edges[i + 1];
      b.label = format_edge(b.lo) + "-" + format_edge(b.hi) + " " + spec.unit;
    } else {
      b.hi = std::numeric_limits<double>::infinity();
      b.label = "> " + format_edge(b.lo) + " " + spec.unit;
    }
    bins.push_back(std::move(b));
  }
  return bins;
}

EvalReport evaluate(const Dataset& gt, const PredictionsByImage& preds, const EvalOptions& opts) {
  EvalReport report;
  report.by_area.bins = make_bins(opts.area_bins);
  report.by_boundary.bins = make_bins(opts.boundary_bins);

  std::set<int> class_ids;
  for (std::size_t c = 0; c < gt.classes.size(); ++c) class_ids.insert(static_cast<int>(c));
  for (const auto& img : gt.images) {
    for (const auto& a : img.annotations) class_ids.insert(a.class_id);
  }

  std::map<int, std::vector<RankedOutcome>> outcomes;
  std::map<int, std::size_t> gt_per_class;
  std::map<int, std::size_t> pred_per_class;
  std::size_t tp = 0, fp = 0, fn = 0;
  static const std::vector<ScoredBox> kNone;

  for (const auto& img : gt.images) {
    ++report.images;
    const GroundTruthImage gti =
        build_ground_truth(img, opts.input_size, opts.reference_tile, opts.reference_stride);
    auto pit = preds.find(img.image_id);
    const auto& image_preds = pit == preds.end() ? kNone : pit->second;

    std::set<int> present;
    for (const auto& e : gti.entries) present.insert(e.class_id);
    for (const auto& p : image_preds) present.insert(p.class_id);

    std::vector<bool> recalled(gti.entries.size(), false);
    for (int c : present) {
      std::vector<std::size_t> gt_idx;
      std::vector<Box> gt_boxes;
      for (std::size_t i = 0; i < gti.entries.size(); ++i) {
        if (gti.entries[i].class_id == c) {
          gt_idx.push_back(i);
          gt_boxes.push_back(gti.entries[i].box);
        }
      }
      std::vector<ScoredBox> all, confident;
      for (const auto& p : image_preds) {
        if (p.class_id != c) continue;
        all.push_back(p);
        if (p.score >= opts.conf_threshold) confident.push_back(p);
      }
      gt_per_class[c] += gt_boxes.size();
      pred_per_class[c] += all.size();

      const MatchResult m_all = greedy_match(all, gt_boxes, opts.iou_thresh);
      auto& out = outcomes[c];
      for (std::size_t i = 0; i < all.size(); ++i) {
        out.push_back({all[i].score, m_all.pred_to_gt[i].has_value()});
      }

      const MatchResult m_conf = greedy_match(confident, gt_boxes, opts.iou_thresh);
      tp += m_conf.true_positives();
      fp += m_conf.false_positives();
      fn += m_conf.false_negatives();
      for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
        if (m_conf.gt_matched[g]) recalled[gt_idx[g]] = true;
      }
    }

    for (std::size_t i = 0; i < gti.entries.size(); ++i) {
      const auto& e = gti.entries[i];
      ++report.gt_total;
      if (auto b = bin_index(opts.area_bins, e.apparent_area)) {
        ++report.by_area.bins[*b].gt_count;
        if (recalled[i]) ++report.by_area.bins[*b].recalled;
      } else {
        ++report.by_area.unbinned;
      }
      if (auto b = bin_index(opts.boundary_bins, e.boundary_distance)) {
        ++report.by_boundary.bins[*b].gt_count;
        if (recalled[i]) ++report.by_boundary.bins[*b].recalled;
      } else {
        ++report.by_boundary.unbinned;
      }
    }
  }

  std::vector<std::optional<double>> aps;
  for (int c : class_ids) {
    ClassAp ca;
    ca.class_id = c;
    ca.name = gt.classes.name_of(c);
    ca.gt_count = gt_per_class[c];
    ca.pred_count = pred_per_class[c];
    ca.ap = average_precision(outcomes[c], ca.gt_count);
    aps.push_back(ca.ap);
    report.per_class.push_back(std::move(ca));
  }
  report.map50 = mean_ap(aps);
  report.at_conf = make_precision_recall(tp, fp, fn);
  finish_bins(report.by_area);
  finish_bins(report.by_boundary);
  return report;
}

namespace {

AreaDistribution distribution(std::vector<double> areas, int input_size,
                              std::span<const double> thresholds) {
  AreaDistribution d;
  d.input_size = input_size;
  d.count = areas.size();
  d.median = median(areas);
  d.histogram_edges.push_back(0.0);
  for (double e = 4.0; e <= 1048576.0; e *= 2.0) d.histogram_edges.push_back(e);
  d.histogram.assign(d.histogram_edges.size(), 0);
  const BinSpec hist{d.histogram_edges, ""};
  std::size_t below64 = 0;
  for (double a : areas) {
    if (auto b = bin_index(hist, a)) ++d.histogram[*b];
    if (a < 64.0) ++below64;
  }
  const double n = static_cast<double>(areas.size());
  d.fraction_below_64 = areas.empty() ? 0.0 : static_cast<double>(below64) / n;
  for (double t : thresholds) {
    const auto below = static_cast<double>(
        std::count_if(areas.begin(), areas.end(), [t](double a) { return a < t; }));
    d.cdf.emplace_back(t, areas.empty() ? 0.0 : below / n);
  }
  return d;
}

}  // namespace

ResolutionCollapseReport resolution_collapse_report(const Dataset& ds,
                                                    std::span<const int> input_sizes,
                                                    std::span<const double> cdf_thresholds) {
  static constexpr int kDefaultSizes[] = {640, 1280};
  static constexpr double kDefaultThresholds[] = {16.0, 64.0, 256.0};
  if (input_sizes.empty()) input_sizes = kDefaultSizes;
  if (cdf_thresholds.empty()) cdf_thresholds = kDefaultThresholds;

  ResolutionCollapseReport r;
  std::vector<double> native;
  for (const auto& img : ds.images) {
    for (const auto& a : img.annotations) native.push_back(a.box.area());
  }
  r.native = distribution(native, 0, cdf_thresholds);
  for (int size : input_sizes) {
    std::vector<double> apparent;
    for (const auto& img : ds.images) {
      for (const auto& a : img.annotations) {
        apparent.push_back(apparent_area(a.box, img.width, img.height, size));
      }
    }
    r.per_input.push_back(distribution(std::move(apparent), size, cdf_thresholds));
  }
  return r;
}

}  // namespace tatm

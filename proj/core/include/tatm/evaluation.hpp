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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tatm/dataset.hpp"
#include "tatm/geometry.hpp"

namespace tatm {

/// A prediction as the evaluator sees it.
struct ScoredBox {
  int class_id = 0;
  double score = 0.0;
  Box box;
};

struct MatchResult {
  /// For each prediction (input order), the matched ground-truth index.
  std::vector<std::optional<std::size_t>> pred_to_gt;
  std::vector<bool> gt_matched;

  std::size_t true_positives() const noexcept;
  std::size_t false_positives() const noexcept { return pred_to_gt.size() - true_positives(); }
  std::size_t false_negatives() const noexcept;
};

/// Same-image, same-class greedy matching. Predictions are visited by score
/// descending (stable); each takes the unmatched ground truth with the highest
/// IoU at or above `iou_thresh` (lowest index on ties).
MatchResult greedy_match(std::span<const ScoredBox> preds, std::span<const Box> gts,
                         double iou_thresh = 0.5);

/// One ranked prediction after matching.
struct RankedOutcome {
  double score = 0.0;
  bool true_positive = false;
};

/// All-points interpolated AP: area under the monotone precision envelope.
/// Outcomes are ranked by score descending with input order breaking ties.
/// nullopt when there is no ground truth.
std::optional<double> average_precision(std::span<const RankedOutcome> outcomes,
                                        std::size_t num_gt);

/// Arithmetic mean over classes that have a value; nullopt if none do.
std::optional<double> mean_ap(std::span<const std::optional<double>> per_class_ap);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// precision = TP/(TP+FP), 1 when there are no predictions.
/// recall = TP/(TP+FN), 1 when there is no ground truth.
PrecisionRecall make_precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;

/// Ground truth with the derived fields the binned metrics use.
struct GroundTruthEntry {
  int class_id = 0;
  Box box;
  double area_native = 0.0;
  double apparent_area = 0.0;
  Point center;
  double boundary_distance = 0.0;  ///< +inf when the reference grid has no interior boundary
};

struct GroundTruthImage {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthEntry> entries;
};

/// Reference grid for boundary binning: tile `reference_tile`, stride
/// `reference_stride` (0 means equal to the tile, i.e. the non-overlap grid).
GroundTruthImage build_ground_truth(const AnnotatedImage& img, int input_size, int reference_tile,
                                    int reference_stride = 0);

struct RecallBin {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;  ///< +inf for the open last bin
  std::size_t gt_count = 0;
  std::size_t recalled = 0;
  std::optional<double> recall;  ///< nullopt when the bin is empty
};

/// Bins [e0,e1), [e1,e2), ..., [ek,inf). Values below e0 are counted as unbinned.
struct BinSpec {
  std::vector<double> edges;
  std::string unit;
};

inline BinSpec default_area_bins() { return {{16.0, 64.0}, "px²"}; }
inline BinSpec default_boundary_bins() { return {{0.0, 16.0, 32.0}, "px"}; }

struct BinnedRecall {
  std::vector<RecallBin> bins;
  std::size_t unbinned = 0;
};

struct ClassAp {
  int class_id = 0;
  std::string name;
  std::size_t gt_count = 0;
  std::size_t pred_count = 0;
  std::optional<double> ap;
};

struct EvalOptions {
  double iou_thresh = 0.5;
  double conf_threshold = 0.25;
  int input_size = 640;      ///< apparent-area scale
  int reference_tile = 640;  ///< boundary-bin reference grid
  int reference_stride = 0;  ///< 0: non-overlap
  BinSpec area_bins = default_area_bins();
  BinSpec boundary_bins = default_boundary_bins();
};

struct EvalReport {
  std::vector<ClassAp> per_class;
  std::optional<double> map50;
  PrecisionRecall at_conf;
  BinnedRecall by_area;
  BinnedRecall by_boundary;
  std::size_t images = 0;
  std::size_t gt_total = 0;
  std::optional<double> mean_ms_per_image;
};

using PredictionsByImage = std::map<std::string, std::vector<ScoredBox>>;

EvalReport evaluate(const Dataset& gt, const PredictionsByImage& preds, const EvalOptions& opts = {});

/// Assigns each value to a bin per `spec`. Returns the bin index or nullopt
/// when below the first edge.
std::optional<std::size_t> bin_index(const BinSpec& spec, double value) noexcept;
std::vector<RecallBin> make_bins(const BinSpec& spec);

struct AreaDistribution {
  int input_size = 0;  ///< 0 for native resolution
  std::size_t count = 0;
  double median = 0.0;
  std::vector<double> histogram_edges;  ///< bin i is [edges[i], edges[i+1]), last open
  std::vector<std::size_t> histogram;
  std::vector<std::pair<double, double>> cdf;  ///< (threshold, fraction strictly below)
  double fraction_below_64 = 0.0;
};

struct ResolutionCollapseReport {
  AreaDistribution native;
  std::vector<AreaDistribution> per_input;
};

ResolutionCollapseReport resolution_collapse_report(const Dataset& ds,
                                                    std::span<const int> input_sizes = {},
                                                    std::span<const double> cdf_thresholds = {});

}  // namespace tatm

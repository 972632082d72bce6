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

#include <gtest/gtest.h>

#include <cmath>

#include "tatm/evaluation.hpp"
#include "tatm/oracles.hpp"
#include "test_util.hpp"

namespace tatm {
namespace {

std::vector<RankedOutcome> outcomes(std::initializer_list<std::pair<double, bool>> l) {
  std::vector<RankedOutcome> v;
  for (auto [s, tp] : l) v.push_back({s, tp});
  return v;
}

bool same_match(const MatchResult& a, const MatchResult& b) {
  return a.pred_to_gt == b.pred_to_gt && a.gt_matched == b.gt_matched;
}

TEST(GreedyMatch, SingleTruePositive) {
  const std::vector<ScoredBox> p{{0, 0.9, {0, 0, 10, 10}}};
  const std::vector<Box> g{{0, 0, 10, 7}};
  const auto m = greedy_match(p, g);
  EXPECT_EQ(m.true_positives(), 1u);
  EXPECT_EQ(m.false_negatives(), 0u);
}

TEST(GreedyMatch, OneToOne) {
  const std::vector<ScoredBox> p{{0, 0.8, {0, 0, 10, 10}}, {0, 0.9, {0, 0, 10, 9}}};
  const std::vector<Box> g{{0, 0, 10, 10}};
  const auto m = greedy_match(p, g);
  EXPECT_FALSE(m.pred_to_gt[0]);
  EXPECT_EQ(m.pred_to_gt[1], 0u);
  EXPECT_EQ(m.false_positives(), 1u);
}

TEST(GreedyMatch, ThresholdIsInclusiveAndPicksBestIou) {
  const std::vector<ScoredBox> p{{0, 0.9, {0, 0, 10, 10}}};
  const std::vector<Box> g{{0, 0, 5, 10}, {0, 0, 10, 8}};
  const auto m = greedy_match(p, g);
  EXPECT_EQ(m.pred_to_gt[0], 1u);
  const std::vector<Box> half{{0, 0, 5, 10}};
  EXPECT_EQ(greedy_match(p, half).true_positives(), 1u);
  EXPECT_EQ(greedy_match(p, half, 0.51).true_positives(), 0u);
}

TEST(GreedyMatch, MatchesOracle) {
  testing::Gen g(41);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Box> gts;
    for (int i = 0; i < 10; ++i) gts.push_back(g.box_in(150, 150, 10, 60));
    std::vector<ScoredBox> preds;
    for (int i = 0; i < 20; ++i) {
      Box b = g.coin(0.6) ? gts[static_cast<std::size_t>(g.integer(0, 9))] : g.box_in(150, 150, 10, 60);
      const double dx = g.uniform(-6, 6), dy = g.uniform(-6, 6);
      b = {b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
      preds.push_back({0, std::round(g.uniform(0, 1) * 10) / 10, b});
    }
    const auto m = greedy_match(preds, gts);
    EXPECT_TRUE(same_match(m, oracle::match(preds, gts)));
    std::vector<int> used(gts.size(), 0);
    for (const auto& x : m.pred_to_gt) {
      if (x) ++used[*x];
    }
    for (std::size_t k = 0; k < gts.size(); ++k) {
      EXPECT_LE(used[k], 1);
      EXPECT_EQ(used[k] == 1, bool(m.gt_matched[k]));
    }
  }
}

TEST(AveragePrecision, HandCase) {
  const auto o = outcomes({{0.9, true}, {0.8, false}, {0.7, true}});
  EXPECT_NEAR(*average_precision(o, 2), 0.5 + 0.5 * 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*oracle::average_precision(o, 2), 0.8333333333333333, 1e-9);
}

TEST(AveragePrecision, EdgeCases) {
  EXPECT_EQ(*average_precision(outcomes({{0.5, true}, {0.4, true}}), 2), 1.0);
  EXPECT_EQ(*average_precision({}, 3), 0.0);
  EXPECT_EQ(*average_precision(outcomes({{0.5, false}}), 1), 0.0);
  EXPECT_FALSE(average_precision(outcomes({{0.5, false}}), 0));
  // Envelope lifts the earlier precision: FP then TP gives 0.5 at recall 1.
  EXPECT_EQ(*average_precision(outcomes({{0.9, false}, {0.8, true}}), 1), 0.5);
}

TEST(AveragePrecision, MatchesOracleAndIsRankOnly) {
  testing::Gen g(42);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<RankedOutcome> o;
    const int n = g.integer(0, 40);
    std::size_t tps = 0;
    for (int i = 0; i < n; ++i) {
      // Distinct scores so the ranking is unambiguous under transforms.
      o.push_back({(i + g.uniform(0.01, 0.99)) / n, g.coin()});
      tps += o.back().true_positive;
    }
    std::shuffle(o.begin(), o.end(), g.engine());
    const std::size_t num_gt = tps + static_cast<std::size_t>(g.integer(0, 5));
    const auto a = average_precision(o, num_gt);
    const auto b = oracle::average_precision(o, num_gt);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (!a) continue;
    EXPECT_NEAR(*a, *b, 1e-9);
    auto t = o;
    for (auto& x : t) x.score = std::exp(3 * x.score) - 7;
    EXPECT_NEAR(*average_precision(t, num_gt), *a, 1e-12);
  }
}

TEST(MeanAp, ExcludesUndefined) {
  const std::vector<std::optional<double>> one{0.7};
  EXPECT_EQ(*mean_ap(one), 0.7);
  const std::vector<std::optional<double>> two{1.0, 0.0, std::nullopt};
  EXPECT_EQ(*mean_ap(two), 0.5);
  EXPECT_FALSE(mean_ap(std::vector<std::optional<double>>{std::nullopt}));
}

TEST(PrecisionRecall, Conventions) {
  auto pr = make_precision_recall(0, 0, 0);
  EXPECT_EQ(pr.precision, 1.0);
  EXPECT_EQ(pr.recall, 1.0);
  pr = make_precision_recall(0, 3, 0);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 1.0);
  pr = make_precision_recall(0, 0, 2);
  EXPECT_EQ(pr.precision, 1.0);
  EXPECT_EQ(pr.recall, 0.0);
  pr = make_precision_recall(3, 1, 1);
  EXPECT_EQ(pr.precision, 0.75);
  EXPECT_EQ(pr.recall, 0.75);
}

Dataset single_image(int w, int h, std::vector<Annotation> anns, std::size_t classes = 1) {
  Dataset ds;
  ds.id = "t";
  for (std::size_t c = 0; c < classes; ++c) ds.classes.names.push_back("c" + std::to_string(c));
  AnnotatedImage img;
  img.image_id = "a";
  img.width = w;
  img.height = h;
  img.annotations = std::move(anns);
  ds.images.push_back(img);
  return ds;
}

TEST(Evaluate, PerfectDetector) {
  const auto ds = single_image(1280, 1280, {{0, {10, 10, 30, 30}}, {1, {700, 700, 800, 800}}}, 2);
  PredictionsByImage p;
  for (const auto& a : ds.images[0].annotations) p["a"].push_back({a.class_id, 0.9, a.box});
  const auto r = evaluate(ds, p);
  EXPECT_EQ(*r.map50, 1.0);
  EXPECT_EQ(r.at_conf.precision, 1.0);
  EXPECT_EQ(r.at_conf.recall, 1.0);
  EXPECT_EQ(r.gt_total, 2u);
}

TEST(Evaluate, NoPredictions) {
  const auto ds = single_image(640, 640, {{0, {10, 10, 30, 30}}});
  const auto r = evaluate(ds, {});
  EXPECT_EQ(*r.map50, 0.0);
  EXPECT_EQ(r.at_conf.recall, 0.0);
  EXPECT_EQ(r.at_conf.precision, 1.0);
}

TEST(Evaluate, ThreeTpOneFpOneFn) {
  const auto ds = single_image(640, 640,
                               {{0, {0, 0, 20, 20}}, {0, {100, 100, 120, 120}}, {0, {200, 200, 220, 220}},
                                {0, {300, 300, 320, 320}}});
  PredictionsByImage p;
  p["a"] = {{0, 0.9, {0, 0, 20, 20}}, {0, 0.8, {100, 100, 120, 120}}, {0, 0.7, {200, 200, 220, 220}},
            {0, 0.6, {500, 500, 520, 520}},
            {0, 0.1, {300, 300, 320, 320}}};  // below the operating threshold
  const auto r = evaluate(ds, p);
  EXPECT_EQ(r.at_conf.tp, 3u);
  EXPECT_EQ(r.at_conf.fp, 1u);
  EXPECT_EQ(r.at_conf.fn, 1u);
  EXPECT_EQ(r.at_conf.precision, 0.75);
  EXPECT_EQ(r.at_conf.recall, 0.75);
  // AP still sees the low-confidence hit: 3/4 precision then 4/5 at full recall.
  EXPECT_NEAR(*r.map50, 0.75 + 0.25 * 0.8, 1e-12);
}

TEST(Evaluate, ClassesNeverMatchAcross) {
  const auto ds = single_image(640, 640, {{0, {0, 0, 20, 20}}}, 2);
  PredictionsByImage p;
  p["a"] = {{1, 0.9, {0, 0, 20, 20}}};
  const auto r = evaluate(ds, p);
  EXPECT_EQ(r.at_conf.tp, 0u);
  EXPECT_EQ(r.per_class.size(), 2u);
  EXPECT_EQ(*r.per_class[0].ap, 0.0);
  EXPECT_FALSE(r.per_class[1].ap);  // no ground truth
  EXPECT_EQ(*r.map50, 0.0);
}

TEST(Evaluate, AreaBinsSmallFixture) {
  // 2560 board: a 20x20 box is 25 px² at 640 input, a 40x40 box is 100 px².
  const auto ds = single_image(2560, 2560,
                               {{0, {100, 100, 120, 120}}, {0, {300, 100, 320, 120}}, {0, {500, 100, 520, 120}},
                                {0, {700, 100, 720, 120}}, {0, {900, 900, 940, 940}}, {0, {0, 0, 4, 4}}});
  PredictionsByImage p;
  p["a"] = {{0, 0.9, {100, 100, 120, 120}}, {0, 0.9, {300, 100, 320, 120}}, {0, 0.9, {900, 900, 940, 940}}};
  const auto r = evaluate(ds, p);
  ASSERT_EQ(r.by_area.bins.size(), 2u);
  EXPECT_EQ(r.by_area.bins[0].label, "16-64 px²");
  EXPECT_EQ(r.by_area.bins[1].label, "> 64 px²");
  EXPECT_EQ(r.by_area.bins[0].gt_count, 4u);
  EXPECT_EQ(*r.by_area.bins[0].recall, 0.5);
  EXPECT_EQ(*r.by_area.bins[1].recall, 1.0);
  EXPECT_EQ(r.by_area.unbinned, 1u);  // 1 px² apparent
}

TEST(Evaluate, EmptyBinIsUndefined) {
  const auto ds = single_image(640, 640, {{0, {100, 100, 200, 200}}});
  PredictionsByImage p;
  p["a"] = {{0, 0.9, {100, 100, 200, 200}}};
  const auto r = evaluate(ds, p);
  EXPECT_FALSE(r.by_area.bins[0].recall);
  EXPECT_EQ(*r.by_area.bins[1].recall, 1.0);
}

TEST(Evaluate, BoundaryBins) {
  const auto ds = single_image(1280, 1280, {{0, {620, 100, 660, 140}}, {0, {600, 300, 620, 320}},
                                            {0, {100, 100, 140, 140}}});
  const auto r = evaluate(ds, {});
  ASSERT_EQ(r.by_boundary.bins.size(), 3u);
  EXPECT_EQ(r.by_boundary.bins[0].label, "0-16 px");
  EXPECT_EQ(r.by_boundary.bins[0].gt_count, 1u);  // centre on x = 640
  EXPECT_EQ(r.by_boundary.bins[1].gt_count, 1u);  // centre 30 px away
  EXPECT_EQ(r.by_boundary.bins[2].gt_count, 1u);
  EXPECT_EQ(r.by_boundary.bins[2].label, "> 32 px");

  const auto small = evaluate(single_image(600, 400, {{0, {0, 0, 10, 10}}, {0, {290, 190, 310, 210}}}), {});
  EXPECT_EQ(small.by_boundary.bins[2].gt_count, 2u);
}

TEST(Evaluate, BinnedRecallAggregatesToOverall) {
  testing::Gen g(43);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset ds;
    ds.classes.names = {"x", "y"};
    PredictionsByImage preds;
    for (int i = 0; i < 5; ++i) {
      AnnotatedImage img;
      img.image_id = "i" + std::to_string(i);
      img.width = g.integer(300, 3000);
      img.height = g.integer(300, 3000);
      for (int k = 0; k < 15; ++k) {
        img.annotations.push_back({g.integer(0, 1), g.box_in(img.width, img.height, 4, 120)});
        if (g.coin(0.6)) {
          const auto& a = img.annotations.back();
          preds[img.image_id].push_back({a.class_id, g.uniform(0, 1), a.box});
        }
      }
      ds.images.push_back(img);
    }
    EvalOptions opts;
    opts.area_bins = {{0.0, 16.0, 64.0}, "px²"};
    const auto r = evaluate(ds, preds, opts);
    for (const BinnedRecall* b : {&r.by_area, &r.by_boundary}) {
      std::size_t gt = 0, rec = 0;
      for (const auto& bin : b->bins) {
        gt += bin.gt_count;
        rec += bin.recalled;
      }
      EXPECT_EQ(b->unbinned, 0u);
      EXPECT_EQ(gt, r.gt_total);
      EXPECT_EQ(rec, r.at_conf.tp);
      EXPECT_DOUBLE_EQ(static_cast<double>(rec) / static_cast<double>(gt), r.at_conf.recall);
    }
  }
}

TEST(Evaluate, LowerDuplicateNeverHelps) {
  testing::Gen g(44);
  for (int trial = 0; trial < 100; ++trial) {
    Box far = g.box_in(400, 400, 10, 100);
    far = {far.x1 + 600, far.y1 + 600, far.x2 + 600, far.y2 + 600};
    const auto ds = single_image(1000, 1000, {{0, g.box_in(400, 400, 10, 100)}, {0, far}});
    PredictionsByImage p;
    p["a"] = {{0, 0.8, ds.images[0].annotations[0].box}, {0, g.uniform(0.2, 0.9), g.box_in(1000, 1000, 10, 100)}};
    const auto base = evaluate(ds, p);
    p["a"].push_back({0, 0.3, ds.images[0].annotations[0].box});
    const auto dup = evaluate(ds, p);
    EXPECT_LE(dup.at_conf.recall, base.at_conf.recall);
    EXPECT_LE(dup.at_conf.precision, base.at_conf.precision);
  }
}

TEST(BuildGroundTruth, DerivedFields) {
  AnnotatedImage img{"a", "a.png", 2560, 1280, {{0, {630, 10, 650, 30}}}};
  const auto gt = build_ground_truth(img, 640, 640);
  ASSERT_EQ(gt.entries.size(), 1u);
  EXPECT_EQ(gt.entries[0].area_native, 400.0);
  EXPECT_EQ(gt.entries[0].apparent_area, 25.0);
  EXPECT_EQ(gt.entries[0].boundary_distance, 0.0);
  EXPECT_EQ(gt.entries[0].center, (Point{640, 20}));
}

TEST(ResolutionCollapse, ClosedForm) {
  Dataset ds;
  AnnotatedImage img{"a", "a.png", 2560, 2560, {}};
  // Sides 8..128 px on a 2560 board; apparent area at 640 is (side/4)^2.
  for (int s = 8; s <= 128; s += 8) img.annotations.push_back({0, {0, 0, double(s), double(s)}});
  ds.images.push_back(img);
  const auto r = resolution_collapse_report(ds);
  ASSERT_EQ(r.per_input.size(), 2u);
  const auto& d640 = r.per_input[0];
  EXPECT_EQ(d640.input_size, 640);
  EXPECT_EQ(d640.count, 16u);
  std::size_t below16 = 0, below64 = 0, below256 = 0;
  for (int s = 8; s <= 128; s += 8) {
    const double a = (s / 4.0) * (s / 4.0);
    below16 += a < 16;
    below64 += a < 64;
    below256 += a < 256;
  }
  ASSERT_EQ(d640.cdf.size(), 3u);
  EXPECT_EQ(d640.cdf[0].second, below16 / 16.0);
  EXPECT_EQ(d640.cdf[1].second, below64 / 16.0);
  EXPECT_EQ(d640.cdf[2].second, below256 / 16.0);
  EXPECT_EQ(d640.fraction_below_64, below64 / 16.0);
  // Median: mean of the 8th and 9th areas, sides 64 and 72.
  EXPECT_EQ(d640.median, (16.0 * 16.0 + 18.0 * 18.0) / 2.0);
  std::size_t hist_total = 0;
  for (auto c : d640.histogram) hist_total += c;
  EXPECT_EQ(hist_total, 16u);
  EXPECT_EQ(r.per_input[1].cdf[1].second, 1.0 / 16.0);  // (s/2)^2 < 64 only for s = 8
}

TEST(ResolutionCollapse, IdenticalBoxesGiveStepCdf) {
  Dataset ds;
  AnnotatedImage img{"a", "a.png", 1280, 1280, {}};
  for (int i = 0; i < 5; ++i) img.annotations.push_back({0, {0, 0, 20, 20}});  // 100 px² at 640
  ds.images.push_back(img);
  const auto r = resolution_collapse_report(ds);
  for (const auto& [t, f] : r.per_input[0].cdf) EXPECT_EQ(f, t > 100 ? 1.0 : 0.0);
  EXPECT_EQ(r.per_input[0].median, 100.0);
}

}  // namespace
}  // namespace tatm

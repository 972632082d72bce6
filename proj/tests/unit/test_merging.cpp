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

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "tatm/error.hpp"
#include "tatm/merging.hpp"
#include "tatm/oracles.hpp"
#include "test_util.hpp"

namespace tatm {
namespace {

using testing::tile_det;

Detection global_det(Box b, double s, int cls = 0) {
  Detection d;
  d.box_global = b;
  d.score = s;
  d.class_id = cls;
  return d;
}

bool same_detection(const Detection& a, const Detection& b) {
  return a.class_id == b.class_id && a.score == b.score && a.box_global == b.box_global &&
         a.tile == b.tile && a.confidence() == b.confidence();
}

bool same_list(const std::vector<Detection>& a, const std::vector<Detection>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same_detection);
}

// Random tiled detections, a mix of loose boxes and split halves across tile edges.
std::vector<Detection> random_tiled(testing::Gen& g, const TileGrid& grid, int n, int classes) {
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i) {
    const auto& t = grid.tiles[static_cast<std::size_t>(g.integer(0, static_cast<int>(grid.tiles.size()) - 1))];
    Box local = g.box_in(t.width, t.height, 4, 90);
    if (g.coin(0.4)) {
      // Push against a random edge.
      const double w = local.width(), h = local.height();
      switch (g.integer(0, 3)) {
        case 0: local.x1 = g.uniform(0, 10); local.x2 = local.x1 + w; break;
        case 1: local.y1 = g.uniform(0, 10); local.y2 = local.y1 + h; break;
        case 2: local.x2 = t.width - g.uniform(0, 10); local.x1 = local.x2 - w; break;
        default: local.y2 = t.height - g.uniform(0, 10); local.y1 = local.y2 - h; break;
      }
    }
    out.push_back(tile_det(t.row, t.col, grid, local, std::round(g.uniform(0, 1) * 100) / 100,
                           g.integer(0, classes - 1)));
  }
  return out;
}

TEST(Nms, HigherScoreSurvives) {
  const std::vector<Detection> d{global_det({0, 0, 10, 10}, 0.8), global_det({0, 0, 10, 12.5}, 0.9)};
  ASSERT_GT(iou(d[0].box_global, d[1].box_global), 0.45);
  const auto out = class_aware_nms(d, 0.45);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
}

TEST(Nms, ClassAware) {
  const std::vector<Detection> d{global_det({0, 0, 10, 10}, 0.8, 0), global_det({0, 0, 10, 10.5}, 0.9, 1)};
  EXPECT_EQ(class_aware_nms(d, 0.45).size(), 2u);
}

TEST(Nms, StrictThreshold) {
  // IoU exactly 0.5: kept at 0.5, suppressed at 0.49.
  const std::vector<Detection> d{global_det({0, 0, 10, 10}, 0.9), global_det({0, 0, 5, 10}, 0.8)};
  EXPECT_EQ(iou(d[0].box_global, d[1].box_global), 0.5);
  EXPECT_EQ(class_aware_nms(d, 0.5).size(), 2u);
  EXPECT_EQ(class_aware_nms(d, 0.49).size(), 1u);
}

TEST(Nms, TieBreaksOnAreaThenPosition) {
  const std::vector<Detection> d{global_det({0, 0, 10, 10}, 0.7), global_det({0, 0, 10, 11}, 0.7)};
  const auto out = class_aware_nms(d, 0.45);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].box_global.y2, 11.0);
  const std::vector<Detection> e{global_det({1, 0, 11, 10}, 0.7), global_det({0, 0, 10, 10}, 0.7)};
  EXPECT_EQ(class_aware_nms(e, 0.45)[0].box_global.x1, 0.0);
}

TEST(Nms, EmptyAndSingleton) {
  EXPECT_TRUE(class_aware_nms({}, 0.45).empty());
  const std::vector<Detection> one{global_det({1, 2, 3, 4}, 0.1)};
  EXPECT_TRUE(same_list(class_aware_nms(one, 0.45), one));
}

TEST(Nms, MatchesOracleAndIsIdempotent) {
  testing::Gen g(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> d;
    const int n = g.integer(0, 50);
    for (int i = 0; i < n; ++i) {
      d.push_back(global_det(g.box_in(200, 200, 5, 80), std::round(g.uniform(0, 1) * 20) / 20, g.integer(0, 3)));
    }
    const double th = g.uniform(0.1, 0.9);
    const auto main = class_aware_nms(d, th);
    EXPECT_TRUE(same_list(main, oracle::nms(d, th)));
    EXPECT_TRUE(same_list(class_aware_nms(main, th), main));
    auto shuffled = d;
    std::shuffle(shuffled.begin(), shuffled.end(), g.engine());
    EXPECT_TRUE(same_list(class_aware_nms(shuffled, th), main));
  }
}

TEST(Sensitivity, Examples) {
  Detection d;
  d.box_tile = Box{5, 300, 45, 340};
  auto m = mark_boundary_sensitivity(d, {640, 640}, 16);
  EXPECT_EQ(*m.boundary_distance, 5.0);
  EXPECT_TRUE(is_boundary_sensitive(m, 16));
  EXPECT_TRUE(m.near_edges.contains(Edge::kLeft));
  EXPECT_EQ(m.near_edges.bits(), EdgeSet{}.bits() | 1u);

  d.box_tile = Box{16, 300, 56, 340};
  m = mark_boundary_sensitivity(d, {640, 640}, 16);
  EXPECT_FALSE(is_boundary_sensitive(m, 16));
  EXPECT_TRUE(m.near_edges.empty());

  d.box_tile = Box{5, 5, 45, 45};
  m = mark_boundary_sensitivity(d, {640, 640}, 16);
  EXPECT_TRUE(m.near_edges.contains(Edge::kLeft));
  EXPECT_TRUE(m.near_edges.contains(Edge::kTop));
  EXPECT_FALSE(m.near_edges.contains(Edge::kRight));
  EXPECT_FALSE(m.near_edges.contains(Edge::kBottom));

  EXPECT_FALSE(is_boundary_sensitive(mark_boundary_sensitivity(d, {640, 640}, 0.0), 0.0));
  EXPECT_THROW(mark_boundary_sensitivity(Detection{}, {640, 640}, 16), GeometryError);
}

struct TwoTiles {
  TileGrid grid = plan_grid(1280, 640, 640, 640);
  AdjacencyGraph graph = build_adjacency(grid);
};

double agreement_of(const TwoTiles& f, const Detection& det, const std::vector<Detection>& others,
                    double tau = 16) {
  std::vector<Detection> all{mark_boundary_sensitivity(det, {640, 640}, tau)};
  all.insert(all.end(), others.begin(), others.end());
  const TileDetectionIndex index(all);
  return adjacent_agreement(all[0], f.grid, f.graph, index, tau);
}

TEST(Agreement, NeighbourAcrossSharedEdge) {
  TwoTiles f;
  const auto det = tile_det(0, 0, f.grid, {600, 300, 635, 340}, 0.5);
  const auto nb = tile_det(0, 1, f.grid, {0, 305, 30, 335}, 0.8);
  EXPECT_EQ(agreement_of(f, det, {nb}), 0.8);
  // Best of several.
  const auto nb2 = tile_det(0, 1, f.grid, {2, 290, 20, 310}, 0.3);
  EXPECT_EQ(agreement_of(f, det, {nb2, nb}), 0.8);
}

TEST(Agreement, ClassMismatchGivesZero) {
  TwoTiles f;
  const auto det = tile_det(0, 0, f.grid, {600, 300, 635, 340}, 0.5, 0);
  EXPECT_EQ(agreement_of(f, det, {tile_det(0, 1, f.grid, {0, 305, 30, 335}, 0.8, 1)}), 0.0);
}

TEST(Agreement, ImageBorderGivesZero) {
  TwoTiles f;
  const auto det = tile_det(0, 0, f.grid, {3, 300, 40, 340}, 0.5);
  EXPECT_EQ(agreement_of(f, det, {tile_det(0, 1, f.grid, {0, 305, 30, 335}, 0.8)}), 0.0);
}

TEST(Agreement, RequiresAlignmentAlongTheEdge) {
  TwoTiles f;
  const auto det = tile_det(0, 0, f.grid, {600, 300, 635, 340}, 0.5);
  EXPECT_EQ(agreement_of(f, det, {tile_det(0, 1, f.grid, {0, 340, 30, 380}, 0.8)}), 0.0);
  EXPECT_EQ(agreement_of(f, det, {tile_det(0, 1, f.grid, {0, 339, 30, 380}, 0.8)}), 0.8);
}

TEST(Agreement, ProximityToEdgeLine) {
  TwoTiles f;
  const auto det = tile_det(0, 0, f.grid, {600, 300, 635, 340}, 0.5);
  EXPECT_EQ(agreement_of(f, det, {tile_det(0, 1, f.grid, {15.5, 300, 40, 340}, 0.8)}), 0.8);
  EXPECT_EQ(agreement_of(f, det, {tile_det(0, 1, f.grid, {16, 300, 40, 340}, 0.8)}), 0.0);
}

TEST(Agreement, OverlapGridUsesOwnTileEdgeLine) {
  const auto grid = plan_grid(1152, 640, 640, 512);
  const auto graph = build_adjacency(grid);
  // Left half in tile 0 ends at its right edge x = 640; the neighbour sees the
  // whole defect at global [600, 680).
  std::vector<Detection> all{mark_boundary_sensitivity(tile_det(0, 0, grid, {600, 300, 640, 340}, 0.5), {640, 640}, 16),
                             tile_det(0, 1, grid, {88, 300, 168, 340}, 0.9)};
  const TileDetectionIndex index(all);
  EXPECT_EQ(adjacent_agreement(all[0], grid, graph, index, 16), 0.9);
}

TEST(AdjustScore, Examples) {
  EXPECT_NEAR(adjust_score(0.5, 0.8, 0.2), 0.66, 1e-15);
  EXPECT_EQ(adjust_score(0.95, 1.0, 0.2), 1.0);
  EXPECT_EQ(adjust_score(0.37, 0.0, 5.0), 0.37);
  EXPECT_EQ(adjust_score(0.37, 0.9, 0.0), 0.37);
}

TEST(AdjustScore, MonotoneAndCappedProperty) {
  testing::Gen g(32);
  for (int i = 0; i < 10000; ++i) {
    const double s = g.uniform(0, 1), a = g.uniform(0, 1), l = g.uniform(0, 2);
    const double r = adjust_score(s, a, l);
    EXPECT_GE(r, s);
    EXPECT_LE(r, 1.0);
    EXPECT_LE(r, adjust_score(std::min(1.0, s + 0.01), a, l));
    EXPECT_LE(r, adjust_score(s, std::min(1.0, a + 0.01), l));
    EXPECT_LE(r, adjust_score(s, a, l + 0.01));
  }
}

// Split defect across the tile 0 / tile 1 seam with a competing false positive.
struct Adversarial {
  TileGrid grid = plan_grid(1152, 640, 640, 512);
  std::vector<Detection> dets{
      tile_det(0, 0, grid, {580, 300, 640, 340}, 0.55),  // left half
      tile_det(0, 1, grid, {128, 300, 168, 340}, 0.55),  // right half, global [640, 680)
      tile_det(0, 0, grid, {580, 300, 624, 340}, 0.60),  // false positive
  };
};

TEST(TaTm, AdversarialFixtureTrace) {
  Adversarial f;
  MergeParams p;
  const auto plain = plain_merge(f.dets, &f.grid, p);
  ASSERT_EQ(plain.size(), 2u);
  EXPECT_EQ(plain[0].score, 0.60);
  EXPECT_EQ(plain[1].box_global, (Box{640, 300, 680, 340}));

  const auto r = ta_tm_merge(f.dets, f.grid, p);
  EXPECT_EQ(r.boundary_sensitive, 1u);
  EXPECT_EQ(r.boosted, 1u);
  ASSERT_EQ(r.detections.size(), 2u);
  const auto& top = r.detections[0];
  EXPECT_EQ(top.box_global, (Box{580, 300, 640, 340}));
  EXPECT_EQ(top.score, 0.55);
  EXPECT_EQ(*top.agreement, 0.55);
  EXPECT_NEAR(top.confidence(), 0.66, 1e-12);
  EXPECT_TRUE(top.near_edges.contains(Edge::kRight));
  EXPECT_EQ(*top.boundary_distance, 0.0);
  EXPECT_EQ(r.detections[1].box_global, (Box{640, 300, 680, 340}));
  EXPECT_FALSE(r.detections[1].agreement);
  EXPECT_EQ(r.detections[1].confidence(), 0.55);
}

TEST(TaTm, LambdaZeroAndTauZeroMatchPlainMerge) {
  testing::Gen g(33);
  for (int trial = 0; trial < 200; ++trial) {
    const auto grid = plan_grid(g.integer(700, 2000), g.integer(700, 2000), 640, g.coin() ? 512 : 640);
    const auto dets = random_tiled(g, grid, g.integer(0, 60), 3);
    MergeParams p;
    const auto plain = plain_merge(dets, &grid, p);
    p.lambda = 0.0;
    EXPECT_TRUE(same_list(ta_tm_merge(dets, grid, p).detections, plain));
    p.lambda = 0.2;
    p.tau = 0.0;
    const auto r = ta_tm_merge(dets, grid, p);
    EXPECT_TRUE(same_list(r.detections, plain));
    EXPECT_EQ(r.boundary_sensitive, 0u);
    EXPECT_EQ(r.boosted, 0u);
  }
}

TEST(TaTm, ScoreInvariantsAndAudit) {
  testing::Gen g(34);
  for (int trial = 0; trial < 200; ++trial) {
    const auto grid = plan_grid(g.integer(700, 2000), g.integer(700, 2000), 640, 512);
    const auto dets = random_tiled(g, grid, g.integer(0, 60), 2);
    MergeParams p;
    p.nms_iou = 0.99;  // keep nearly everything so the audit is visible in the output
    p.conf_threshold = 0.0;
    const auto r = ta_tm_merge(dets, grid, p);
    std::size_t boosted = 0;
    for (const auto& d : r.detections) {
      ASSERT_TRUE(d.adjusted_score);
      EXPECT_GE(*d.adjusted_score, d.score);
      EXPECT_LE(*d.adjusted_score, 1.0);
      const bool eq = *d.adjusted_score == d.score;
      const bool sensitive = is_boundary_sensitive(d, p.tau);
      EXPECT_EQ(sensitive, d.agreement.has_value());
      if (!sensitive || *d.agreement == 0.0) EXPECT_TRUE(eq);
      if (sensitive && *d.agreement > 0.0 && d.score < 1.0) EXPECT_FALSE(eq);
      if (d.boosted()) ++boosted;
    }
    EXPECT_LE(boosted, r.boosted);
  }
}

TEST(TaTm, DifferencesOnlyNearBoostedDetections) {
  testing::Gen g(35);
  for (int trial = 0; trial < 200; ++trial) {
    const auto grid = plan_grid(g.integer(700, 1600), g.integer(700, 1600), 640, 512);
    const auto dets = random_tiled(g, grid, g.integer(5, 60), 2);
    MergeParams p;
    p.conf_threshold = 0.0;
    const auto plain = plain_merge(dets, &grid, p);
    const auto tatm = ta_tm_merge(dets, grid, p);

    // Detections linked by same-class IoU above the threshold form the components
    // NMS acts on. A component with nothing boosted must resolve identically.
    // Recover adjusted scores by re-running with nms off.
    MergeParams keep_all = p;
    keep_all.nms_iou = 0.999999;
    std::vector<Detection> all = ta_tm_merge(dets, grid, keep_all).detections;
    const std::size_t n = all.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
      return parent[i] == i ? i : parent[i] = root(parent[i]);
    };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (all[i].class_id == all[j].class_id && iou(all[i].box_global, all[j].box_global) > p.nms_iou) {
          parent[root(i)] = root(j);
        }
      }
    }
    auto component_boosted = [&](const Detection& d) {
      for (std::size_t i = 0; i < n; ++i) {
        if (all[i].box_global == d.box_global && all[i].class_id == d.class_id && all[i].score == d.score) {
          for (std::size_t j = 0; j < n; ++j) {
            if (root(j) == root(i) && all[j].boosted()) return true;
          }
          return false;
        }
      }
      ADD_FAILURE() << "detection not found";
      return true;
    };
    auto contains = [](const std::vector<Detection>& v, const Detection& d) {
      return std::any_of(v.begin(), v.end(), [&](const Detection& e) {
        return e.box_global == d.box_global && e.class_id == d.class_id && e.score == d.score;
      });
    };
    if (n != dets.size()) continue;  // exact duplicates collapsed; skip the rare case
    for (const auto& d : plain) {
      if (!contains(tatm.detections, d)) EXPECT_TRUE(component_boosted(d));
    }
    for (const auto& d : tatm.detections) {
      if (!contains(plain, d)) EXPECT_TRUE(component_boosted(d));
    }
  }
}

TEST(TaTm, PermutationInvariant) {
  testing::Gen g(36);
  for (int trial = 0; trial < 100; ++trial) {
    const auto grid = plan_grid(1500, 1500, 640, 512);
    auto dets = random_tiled(g, grid, 50, 3);
    const auto a = ta_tm_merge(dets, grid, {});
    std::shuffle(dets.begin(), dets.end(), g.engine());
    const auto b = ta_tm_merge(dets, grid, {});
    EXPECT_TRUE(same_list(a.detections, b.detections));
    EXPECT_EQ(a.boosted, b.boosted);
  }
}

TEST(TaTm, BoostedNonDecreasingInTau) {
  testing::Gen g(37);
  for (int trial = 0; trial < 200; ++trial) {
    const auto grid = plan_grid(g.integer(700, 2000), g.integer(700, 2000), 640, 512);
    const auto dets = random_tiled(g, grid, g.integer(0, 60), 2);
    std::size_t prev = 0;
    std::size_t prev_sensitive = 0;
    for (double tau : {0.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
      MergeParams p;
      p.tau = tau;
      const auto r = ta_tm_merge(dets, grid, p);
      EXPECT_GE(r.boosted, prev);
      EXPECT_GE(r.boundary_sensitive, prev_sensitive);
      prev = r.boosted;
      prev_sensitive = r.boundary_sensitive;
    }
  }
}

TEST(TaTm, ConfidenceFilterPlacement) {
  Adversarial f;
  MergeParams p;
  p.conf_threshold = 0.56;
  // Filtering first removes both halves before they can support each other.
  const auto before = ta_tm_merge(f.dets, f.grid, p);
  ASSERT_EQ(before.detections.size(), 1u);
  EXPECT_EQ(before.detections[0].score, 0.60);
  // Filtering after adjustment keeps the boosted half (0.66) and drops the unboosted one.
  const auto after = ta_tm_merge(f.dets, f.grid, p, true);
  ASSERT_EQ(after.detections.size(), 1u);
  EXPECT_EQ(after.detections[0].box_global, (Box{580, 300, 640, 340}));
}

TEST(TaTm, RequiresTileProvenance) {
  const auto grid = plan_grid(640, 640, 640, 640);
  const std::vector<Detection> d{global_det({0, 0, 10, 10}, 0.9)};
  EXPECT_THROW(ta_tm_merge(d, grid, {}), Error);
  std::vector<Detection> bad{tile_det(0, 0, grid, {0, 0, 10, 10}, 0.9)};
  bad[0].tile = TileIndex{3, 3};
  EXPECT_THROW(ta_tm_merge(bad, grid, {}), Error);
}

TEST(MergeParams, Validation) {
  MergeParams p;
  EXPECT_NO_THROW(p.validate());
  p.mu = 0.1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.nms_iou = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.tau = -1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.lambda = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.conf_threshold = 1.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(PlainMerge, DuplicateFromOverlappingTiles) {
  const auto grid = plan_grid(1152, 640, 640, 512);
  // Same global defect seen by both tiles.
  const std::vector<Detection> d{tile_det(0, 0, grid, {550, 100, 600, 150}, 0.7),
                                 tile_det(0, 1, grid, {38, 100, 89, 151}, 0.8)};
  ASSERT_GT(iou(d[0].box_global, d[1].box_global), 0.9);
  const auto out = plain_merge(d, &grid, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.8);
}

TEST(PlainMerge, PassthroughAndOracle) {
  const auto grid = plan_grid(640, 640, 640, 640);
  const std::vector<Detection> one{tile_det(0, 0, grid, {1, 2, 30, 40}, 0.5)};
  EXPECT_TRUE(same_list(plain_merge(one, &grid, {}), one));
  testing::Gen g(38);
  const auto big = plan_grid(2000, 2000, 640, 512);
  const auto dets = random_tiled(g, big, 100, 3);
  MergeParams p;
  std::vector<Detection> filtered;
  for (const auto& d : dets) {
    if (d.score >= p.conf_threshold) filtered.push_back(d);
  }
  EXPECT_TRUE(same_list(plain_merge(dets, &big, p), oracle::nms(filtered, p.nms_iou)));
}

}  // namespace
}  // namespace tatm

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

#include <benchmark/benchmark.h>

#include "tatm/tatm.hpp"
#include "test_util.hpp"

namespace {

using namespace tatm;

// Detections scattered over an overlap grid, with a share of boundary
// straddlers split across neighbouring tiles.
std::vector<Detection> scatter(const TileGrid& grid, int n, std::uint64_t seed) {
  testing::Gen g(seed);
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i) {
    const auto& t = grid.tiles[g.integer(0, int(grid.tiles.size()) - 1)];
    Box local = g.box_in(t.width, t.height, 8, 120);
    if (g.coin(0.3)) local = {t.width - 20.0, local.y1, double(t.width), local.y2};
    out.push_back(testing::tile_det(t.row, t.col, grid, local, g.uniform(0.2, 1.0), g.integer(0, 5)));
  }
  return out;
}

void BM_ClassAwareNms(benchmark::State& state) {
  const TileGrid grid = plan_grid(2617, 2534, 640, 512);
  const auto dets = scatter(grid, int(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(class_aware_nms(dets, 0.45));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassAwareNms)->Arg(64)->Arg(512)->Arg(4096);

void BM_TaTmMerge(benchmark::State& state) {
  const TileGrid grid = plan_grid(2617, 2534, 640, 512);
  const auto dets = scatter(grid, int(state.range(0)), 2);
  MergeParams p;
  for (auto _ : state) benchmark::DoNotOptimize(ta_tm_merge(dets, grid, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TaTmMerge)->Arg(64)->Arg(512)->Arg(4096);

void BM_PlanGrid(benchmark::State& state) {
  const int side = int(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(plan_grid(side, side, 640, 512));
}
BENCHMARK(BM_PlanGrid)->Arg(2560)->Arg(8192);

void BM_SimulatedCompare(benchmark::State& state) {
  ScenarioSpec spec;
  spec.image_count = 4;
  PlacementGroup grp;
  grp.count = 40;
  spec.groups = {grp};
  const Dataset ds = generate_scenario(spec);
  SimulatedBackend backend{SimDetectorParams{}};
  Config cfg;
  const auto strategies = default_strategies(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(compare_strategies(ds, strategies, backend, cfg, {1, false}));
}
BENCHMARK(BM_SimulatedCompare)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

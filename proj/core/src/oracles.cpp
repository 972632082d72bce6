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

#include "tatm/oracles.hpp"

#include <algorithm>
#include <tuple>

namespace tatm::oracle {

double iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
  const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return (a == b) ? 1.0 : 0.0;
  return inter / uni;
}

namespace {

double key_score(const Detection& d, ScoreField f) {
  return f == ScoreField::kAdjusted ? d.confidence() : d.score;
}

// True when `a` outranks `b`; earlier index wins a complete tie.
bool better(const Detection& a, std::size_t ia, const Detection& b, std::size_t ib, ScoreField f) {
  const double area_a = (a.box_global.x2 - a.box_global.x1) * (a.box_global.y2 - a.box_global.y1);
  const double area_b = (b.box_global.x2 - b.box_global.x1) * (b.box_global.y2 - b.box_global.y1);
  const auto ka = std::make_tuple(-key_score(a, f), -area_a, a.box_global.x1, a.box_global.y1, a.box_global.x2,
                                  a.box_global.y2, a.class_id, ia);
  const auto kb = std::make_tuple(-key_score(b, f), -area_b, b.box_global.x1, b.box_global.y1, b.box_global.x2,
                                  b.box_global.y2, b.class_id, ib);
  return ka < kb;
}

}  // namespace

std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh, ScoreField field) {
  std::vector<std::size_t> alive(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) alive[i] = i;
  std::vector<Detection> kept;
  while (!alive.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < alive.size(); ++k) {
      if (better(dets[alive[k]], alive[k], dets[alive[best]], alive[best], field)) best = k;
    }
    const Detection& top = dets[alive[best]];
    kept.push_back(top);
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (k == best) continue;
      const Detection& d = dets[alive[k]];
      if (d.class_id == top.class_id && oracle::iou(d.box_global, top.box_global) > iou_thresh) continue;
      next.push_back(alive[k]);
    }
    alive = std::move(next);
  }
  return kept;
}

MatchResult match(std::span<const ScoredBox> preds, std::span<const Box> gts, double iou_thresh) {
  MatchResult r;
  r.pred_to_gt.assign(preds.size(), std::nullopt);
  r.gt_matched.assign(gts.size(), false);
  std::vector<bool> used(preds.size(), false);
  for (std::size_t step = 0; step < preds.size(); ++step) {
    // Highest remaining score; lowest index on ties.
    std::size_t p = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (used[i]) continue;
      if (p == preds.size() || preds[i].score > preds[p].score) p = i;
    }
    used[p] = true;
    std::optional<std::size_t> pick;
    double pick_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[g]) continue;
      const double v = oracle::iou(preds[p].box, gts[g]);
      if (v >= iou_thresh && v > pick_iou) {
        pick = g;
        pick_iou = v;
      }
    }
    if (pick) {
      r.pred_to_gt[p] = pick;
      r.gt_matched[*pick] = true;
    }
  }
  return r;
}

std::optional<double> average_precision(std::span<const RankedOutcome> outcomes, std::size_t num_gt) {
  if (num_gt == 0) return std::nullopt;
  std::vector<std::size_t> order(outcomes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Insertion sort: stable, obviously correct, and fast enough for tests.
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0 && outcomes[order[j]].score > outcomes[order[j - 1]].score; --j) {
      std::swap(order[j], order[j - 1]);
    }
  }
  std::vector<double> precision(order.size());
  std::vector<bool> tp(order.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp[k] = outcomes[order[k]].true_positive;
    if (tp[k]) ++hits;
    precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!tp[k]) continue;
    double best = 0.0;
    for (std::size_t j = k; j < order.size(); ++j) best = std::max(best, precision[j]);
    ap += best / static_cast<double>(num_gt);
  }
  return ap;
}

}  // namespace tatm::oracle

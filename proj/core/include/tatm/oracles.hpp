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

// Deliberately naive reference implementations. They share no code with the
// production paths and exist so tests have something independent to compare
// against.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tatm/evaluation.hpp"
#include "tatm/merging.hpp"

namespace tatm::oracle {

double iou(const Box& a, const Box& b);

/// Repeatedly takes the best remaining detection and deletes every remaining
/// same-class detection overlapping it by more than `iou_thresh`.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh,
                           ScoreField field = ScoreField::kOriginal);

/// Exhaustive greedy matching: O(P * G) with a linear scan per prediction.
MatchResult match(std::span<const ScoredBox> preds, std::span<const Box> gts, double iou_thresh = 0.5);

/// Interpolated precision at every true positive, summed with weight 1/num_gt.
std::optional<double> average_precision(std::span<const RankedOutcome> outcomes, std::size_t num_gt);

}  // namespace tatm::oracle

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

#include <filesystem>
#include <string>

#include "tatm/dataset.hpp"
#include "tatm/evaluation.hpp"
#include "tatm/pipeline.hpp"

namespace tatm {

// JSON floats are rounded to 6 decimals; CSV and Markdown use %.6f. Missing
// values are null in JSON, empty in CSV and "-" in Markdown.

std::string report_json(const EvalReport& r);
std::string report_csv(const EvalReport& r);
std::string report_md(const EvalReport& r, const std::string& title = "Evaluation");
/// report.json, report.csv, report.md
void write_report(const EvalReport& r, const std::filesystem::path& dir);

std::string manifest_json(const RunManifest& m);

std::string comparison_json(const Comparison& c);
std::string comparison_csv(const Comparison& c);           ///< mAP / recall / precision / ms
std::string comparison_size_csv(const Comparison& c);      ///< recall by apparent-area bin
std::string comparison_boundary_csv(const Comparison& c);  ///< recall by boundary-distance bin
std::string comparison_md(const Comparison& c);
/// compare.{json,csv,md}, compare_size.csv, compare_boundary.csv
void write_comparison(const Comparison& c, const std::filesystem::path& dir);

std::string sweep_json(const Sweep& s);
std::string sweep_csv(const Sweep& s);
std::string sweep_md(const Sweep& s);
/// sweep.{json,csv,md}
void write_sweep(const Sweep& s, const std::filesystem::path& dir);

std::string collapse_json(const ResolutionCollapseReport& r);
std::string collapse_md(const ResolutionCollapseReport& r);

std::string dataset_stats_json(const DatasetStats& s, const ClassMap& classes);
std::string dataset_stats_md(const DatasetStats& s, const ClassMap& classes);

}  // namespace tatm

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

#include "tatm/backend.hpp"
#include "tatm/config.hpp"
#include "tatm/dataset.hpp"
#include "tatm/error.hpp"
#include "tatm/evaluation.hpp"
#include "tatm/formats.hpp"
#include "tatm/geometry.hpp"
#include "tatm/imaging.hpp"
#include "tatm/merging.hpp"
#include "tatm/pipeline.hpp"
#include "tatm/reports.hpp"
#include "tatm/slicer.hpp"
#include "tatm/synth.hpp"
#include "tatm/tiling.hpp"

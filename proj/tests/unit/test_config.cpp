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

#include "tatm/config.hpp"
#include "tatm/error.hpp"

namespace tatm {
namespace {

TEST(Config, DefaultsMatchReferenceSettings) {
  const Config c;
  EXPECT_EQ(c.tile_size, 640);
  EXPECT_EQ(c.stride, 512);
  EXPECT_EQ(c.conf, 0.25);
  EXPECT_EQ(c.nms_iou, 0.45);
  EXPECT_EQ(c.tau, 16.0);
  EXPECT_EQ(c.lambda, 0.2);
  EXPECT_EQ(c.mu, 0.0);
  EXPECT_EQ(c.input_full, (std::vector<int>{640, 1280}));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParseFlatFile) {
  const auto c = parse_config(
      "# comment\n"
      "tile_size = 512\n"
      "stride=256   # trailing\n"
      "\n"
      "tau = 32\n"
      "lambda = 0.4\n"
      "input_full = 640, 1024\n"
      "backend.kind = subprocess\n"
      "backend.cmd = python3 serve.py --weights best.pt\n"
      "filter_after_adjust = true\n");
  EXPECT_EQ(c.tile_size, 512);
  EXPECT_EQ(c.stride, 256);
  EXPECT_EQ(c.tau, 32.0);
  EXPECT_EQ(c.lambda, 0.4);
  EXPECT_EQ(c.input_full, (std::vector<int>{640, 1024}));
  EXPECT_EQ(c.backend.kind, "subprocess");
  EXPECT_EQ(c.backend.cmd, "python3 serve.py --weights best.pt");
  EXPECT_TRUE(c.filter_after_adjust);
  EXPECT_EQ(c.merge_params().tau, 32.0);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("tau = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("tile_size = 6.5\n"), ConfigError);
  EXPECT_THROW(parse_config("tau\n"), FormatError);
  try {
    parse_config("\n\nstride = x\n", "my.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("my.cfg:3"), std::string::npos);
  }
  Config c;
  c.set("mu", "0.5");
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.set("stride", "700");
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.set("backend.kind", "magic");
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  EXPECT_THROW(c.set("filter_after_adjust", "maybe"), ConfigError);
}

TEST(Config, OverridesWinAndKeysRoundTrip) {
  Config c = parse_config("tau = 8\nlambda = 0.1\n");
  c.set("tau", "24");
  EXPECT_EQ(c.tau, 24.0);
  EXPECT_EQ(c.lambda, 0.1);
  // canonical() is itself a valid config file describing the same settings.
  const Config back = parse_config(c.canonical());
  EXPECT_EQ(back.canonical(), c.canonical());
  EXPECT_EQ(Config::keys().size(), 15u);
  for (const auto& k : Config::keys()) EXPECT_NE(c.canonical().find(k + " = "), std::string::npos);
}

TEST(Config, HashIsStableAndSensitive) {
  // FNV-1a 64 reference vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  Config a, b;
  EXPECT_EQ(a.params_hash(), b.params_hash());
  EXPECT_EQ(a.params_hash().size(), 16u);
  b.set("lambda", "0.3");
  EXPECT_NE(a.params_hash(), b.params_hash());
}

}  // namespace
}  // namespace tatm

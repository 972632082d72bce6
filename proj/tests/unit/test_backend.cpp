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

#include <atomic>
#include <fstream>
#include <thread>

#include "tatm/backend.hpp"
#include "tatm/error.hpp"
#include "tatm/pipeline.hpp"
#include "test_util.hpp"

namespace tatm {
namespace {

const std::string kEcho = TATM_ECHO_BACKEND;

AnnotatedImage board(const std::string& id, int w, int h) {
  AnnotatedImage img;
  img.image_id = id;
  img.file_name = id + ".png";
  img.width = w;
  img.height = h;
  return img;
}

std::vector<WorkUnit> tile_units(const AnnotatedImage& img) {
  Config cfg;
  return plan_work(img, parse_strategy("tile-overlap-nms", cfg));
}

TEST(Protocol, HandshakeRoundTrip) {
  const std::string line = format_handshake({1, "yolo-adapter", 4});
  EXPECT_EQ(line, R"({"protocol_version":1,"backend_id":"yolo-adapter","max_in_flight":4})");
  const auto h = parse_handshake(line);
  EXPECT_EQ(h.backend_id, "yolo-adapter");
  EXPECT_EQ(h.max_in_flight, 4);
  EXPECT_EQ(parse_handshake(R"({"protocol_version":1,"backend_id":"x"})").max_in_flight, 1);
  EXPECT_THROW(parse_handshake(R"({"protocol_version":2,"backend_id":"x"})"), BackendError);
  EXPECT_THROW(parse_handshake(R"({"backend_id":"x"})"), FormatError);
  EXPECT_THROW(parse_handshake("hello"), FormatError);
}

TEST(Protocol, RequestRoundTrip) {
  WorkUnit u;
  u.unit_id = "b:r0c1";
  u.image_path = "/data/b.png";
  u.x0 = 512;
  u.width = 640;
  u.height = 640;
  u.target_input = 640;
  const std::string line = format_request(u);
  EXPECT_EQ(line, R"({"unit_id":"b:r0c1","image_path":"/data/b.png","region":[512,0,640,640],"target_input":640})");
  const auto back = parse_request(line);
  EXPECT_EQ(back.unit_id, u.unit_id);
  EXPECT_EQ(back.x0, 512);
  EXPECT_EQ(back.width, 640);
  EXPECT_THROW(parse_request(R"({"unit_id":"a","image_path":"p","region":[1,2,3],"target_input":640})"),
               FormatError);
}

TEST(Protocol, ResponseRoundTripAndValidation) {
  UnitResult r;
  r.unit_id = "b:full640";
  r.detections.push_back({{1.5, 2, 30, 40}, 0.75, 2});
  r.input_scale = std::array<double, 2>{0.25, 0.25};
  const auto back = parse_response(format_response(r));
  EXPECT_EQ(back.unit_id, r.unit_id);
  ASSERT_EQ(back.detections.size(), 1u);
  EXPECT_EQ(back.detections[0].box, r.detections[0].box);
  EXPECT_EQ(back.detections[0].score, 0.75);
  EXPECT_EQ(back.detections[0].class_id, 2);
  EXPECT_EQ(back.input_scale, r.input_scale);

  const auto err = parse_response(R"({"unit_id":"u","error":"oom"})");
  EXPECT_EQ(err.error, "oom");
  EXPECT_TRUE(parse_response(R"({"unit_id":"u","detections":[]})").detections.empty());
  EXPECT_THROW(parse_response(R"({"unit_id":"u"})"), FormatError);
  EXPECT_THROW(parse_response(R"({"unit_id":"u","detections":[{"box":[0,0,1],"score":0.5,"class_id":0}]})"),
               FormatError);
  EXPECT_THROW(parse_response(R"({"unit_id":"u","detections":[{"box":[2,0,1,1],"score":0.5,"class_id":0}]})"),
               FormatError);
  EXPECT_THROW(parse_response(R"({"unit_id":"u","detections":[{"box":[0,0,1,1],"score":1.5,"class_id":0}]})"),
               FormatError);
  EXPECT_THROW(parse_response(R"({"unit_id":"u","detections":[],"input_scale":[0,1]})"), FormatError);
}

TEST(Precomputed, MissingFileMeansNoDetections) {
  testing::TempDir dir("pre_empty");
  PrecomputedBackend b(dir.path());
  const auto img = board("none", 1280, 1280);
  const auto units = tile_units(img);
  const auto res = b.detect(img, units);
  ASSERT_EQ(res.size(), units.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    EXPECT_EQ(res[i].unit_id, units[i].unit_id);
    EXPECT_TRUE(res[i].detections.empty());
  }
}

// Interchange file with records in the first two tiles of a 1280x640 board plus a whole-image record.
void write_fixture(const std::filesystem::path& dir) {
  const auto grid = plan_grid(1280, 640, 640, 512);
  std::vector<DetectionRecord> recs;
  ClassMap cm;
  cm.names = {"a"};
  recs.push_back(to_record(testing::tile_det(0, 0, grid, {100, 100, 140, 150}, 0.9), "b", "tile-overlap-nms",
                           grid.find({0, 0}), cm));
  auto second = to_record(testing::tile_det(0, 1, grid, {600, 10, 630, 40}, 0.7), "b", "tile-overlap-nms",
                          grid.find({0, 1}), cm);
  second.box_tile.reset();  // resolved from box_global
  recs.push_back(second);
  DetectionRecord whole;
  whole.image_id = "b";
  whole.strategy = "full-640";
  whole.box_global = {5, 5, 25, 25};
  whole.score = 0.6;
  recs.push_back(whole);
  write_detections(dir / "b.jsonl", recs);
}

TEST(Precomputed, MatchesUnitsByTileAndStrategy) {
  testing::TempDir dir("pre");
  write_fixture(dir.path());
  PrecomputedBackend b(dir.path());
  const auto img = board("b", 1280, 640);
  const auto res = b.detect(img, tile_units(img));
  ASSERT_EQ(res.size(), 3u);
  EXPECT_TRUE(res[2].detections.empty());
  ASSERT_EQ(res[0].detections.size(), 1u);
  EXPECT_EQ(res[0].detections[0].box, (Box{100, 100, 140, 150}));
  ASSERT_EQ(res[1].detections.size(), 1u);
  EXPECT_EQ(res[1].detections[0].box, (Box{600, 10, 630, 40}));

  Config cfg;
  const auto full640 = plan_work(img, parse_strategy("full-640", cfg));
  const auto full = b.detect(img, full640);
  ASSERT_EQ(full[0].detections.size(), 1u);
  EXPECT_EQ(full[0].detections[0].score, 0.6);
  EXPECT_TRUE(b.detect(img, plan_work(img, parse_strategy("full-1280", cfg)))[0].detections.empty());
  // Tile records from another grid do not leak into a tile-nms run.
  const auto nms_units = plan_work(img, parse_strategy("tile-nms", cfg));
  const auto nms = b.detect(img, nms_units);
  EXPECT_EQ(nms[0].detections.size(), 1u);  // tile (0,0) is identical in both grids
  EXPECT_TRUE(nms[1].detections.empty());   // tile (0,1) starts at 512 vs 640
}

TEST(Subprocess, HandshakeAndEcho) {
  SubprocessBackend b(kEcho + " --id echo-7 --max-in-flight 3");
  EXPECT_EQ(b.id(), "echo-7");
  EXPECT_EQ(b.handshake().max_in_flight, 3);
  const auto img = board("e", 2617, 2534);
  const auto units = tile_units(img);
  const auto res = b.detect(img, units);
  ASSERT_EQ(res.size(), 25u);
  for (std::size_t i = 0; i < res.size(); ++i) {
    EXPECT_EQ(res[i].unit_id, units[i].unit_id);
    ASSERT_EQ(res[i].detections.size(), 1u);
    EXPECT_EQ(res[i].detections[0].box, (Box{10, 10, 50, 50}));
  }
  // Reusable across calls.
  EXPECT_EQ(b.detect(img, units).size(), 25u);
}

TEST(Subprocess, OutOfOrderResponsesAreMatchedById) {
  testing::TempDir dir("sub_rev");
  const auto log = dir / "requests.log";
  SubprocessBackend b(kEcho + " --reverse --max-in-flight 4 --log " + log.string());
  const auto img = board("rev", 2617, 2534);
  const auto units = tile_units(img);
  const auto res = b.detect(img, units);
  for (std::size_t i = 0; i < res.size(); ++i) EXPECT_EQ(res[i].unit_id, units[i].unit_id);
  std::ifstream in(log);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) {
    EXPECT_EQ(parse_request(l).unit_id, units[lines].unit_id);
    ++lines;
  }
  EXPECT_EQ(lines, units.size());
}

TEST(Subprocess, ErrorResponseIsPerUnit) {
  SubprocessBackend b(kEcho + " --fail-unit r1c1");
  const auto img = board("f", 1280, 1280);
  const auto units = tile_units(img);
  const auto res = b.detect(img, units);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (res[i].error) {
      ++errors;
      EXPECT_EQ(units[i].unit_id, "f:r1c1");
      EXPECT_THROW(remap_unit_result(units[i], res[i]), BackendError);
    }
  }
  EXPECT_EQ(errors, 1u);
  // The process stays usable.
  EXPECT_EQ(b.detect(img, units).size(), units.size());
}

TEST(Subprocess, CrashMidBatchBreaksTheBackend) {
  SubprocessBackend b(kEcho + " --die-after 2");
  const auto img = board("c", 1280, 1280);
  const auto units = tile_units(img);
  EXPECT_THROW(b.detect(img, units), BackendError);
  EXPECT_THROW(b.detect(img, units), BackendError);
}

TEST(Subprocess, StartupFailures) {
  EXPECT_THROW(SubprocessBackend(kEcho + " --bad-handshake"), BackendError);
  EXPECT_THROW(SubprocessBackend(kEcho + " --no-handshake"), BackendError);
  EXPECT_THROW(SubprocessBackend("/nonexistent/detector --serve"), BackendError);
}

TEST(Subprocess, UnknownUnitIdIsRejected) {
  SubprocessBackend b(kEcho + " --wrong-id");
  const auto img = board("w", 640, 640);
  EXPECT_THROW(b.detect(img, tile_units(img)), BackendError);
}

TEST(Subprocess, ConcurrentCallersAreSerialised) {
  SubprocessBackend b(kEcho + " --max-in-flight 2");
  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      const auto img = board("t" + std::to_string(t), 2000, 2000);
      const auto units = tile_units(img);
      for (int rep = 0; rep < 5; ++rep) {
        const auto res = b.detect(img, units);
        bool good = res.size() == units.size();
        for (std::size_t i = 0; good && i < res.size(); ++i) good = res[i].unit_id == units[i].unit_id;
        if (good) ++ok;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 20);
}

TEST(Subprocess, EquivalentToPrecomputed) {
  testing::TempDir dir("equiv");
  write_fixture(dir.path());
  Dataset ds;
  ds.id = "eq";
  ds.classes.names = {"a"};
  ds.images.push_back(board("b", 1280, 640));
  ds.images.push_back(board("empty", 1500, 900));
  Config cfg;
  PrecomputedBackend pre(dir.path());
  SubprocessBackend sub(kEcho + " --max-in-flight 4 --precomputed " + dir.path().string());
  for (const char* name : {"tile-overlap-tatm", "tile-overlap-nms", "full-640"}) {
    const Strategy s = parse_strategy(name, cfg);
    const auto a = run_strategy(ds, s, pre, cfg, {1, false});
    const auto c = run_strategy(ds, s, sub, cfg, {2, false});
    EXPECT_EQ(a.records(ds.classes), c.records(ds.classes)) << name;
    EXPECT_FALSE(a.records(ds.classes).empty()) << name;
  }
}

}  // namespace
}  // namespace tatm

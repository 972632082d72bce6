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

#include "tatm/imaging.hpp"

#include "tatm/error.hpp"

#ifdef TATM_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#endif

namespace tatm {

#ifdef TATM_HAVE_OPENCV

namespace {

class OpenCvCodec final : public ImageCodec {
 public:
  bool write_crop(const std::filesystem::path& source, const TileSpec& tile,
                  const std::filesystem::path& dest) const override {
    const cv::Mat img = cv::imread(source.string(), cv::IMREAD_UNCHANGED);
    if (img.empty()) return false;
    const cv::Rect roi(tile.x0, tile.y0, tile.width, tile.height);
    if ((roi & cv::Rect(0, 0, img.cols, img.rows)) != roi) {
      throw GeometryError("tile exceeds the decoded image " + source.string());
    }
    if (dest.has_parent_path()) std::filesystem::create_directories(dest.parent_path());
    if (!cv::imwrite(dest.string(), img(roi))) {
      throw Error("cannot write crop " + dest.string());
    }
    return true;
  }

  void render_board(const AnnotatedImage& img, const std::filesystem::path& dest,
                    std::uint64_t seed) const override {
    cv::Mat board(img.height, img.width, CV_8UC3, cv::Scalar(34, 96, 40));
    cv::RNG rng(seed);
    for (const auto& a : img.annotations) {
      const int shade = 180 + static_cast<int>(rng.uniform(0, 60));
      const cv::Scalar colour(shade, shade, (a.class_id * 37) % 256);
      cv::rectangle(board,
                    cv::Point(static_cast<int>(a.box.x1), static_cast<int>(a.box.y1)),
                    cv::Point(static_cast<int>(a.box.x2) - 1, static_cast<int>(a.box.y2) - 1),
                    colour, cv::FILLED);
    }
    if (dest.has_parent_path()) std::filesystem::create_directories(dest.parent_path());
    if (!cv::imwrite(dest.string(), board)) throw Error("cannot write " + dest.string());
  }
};

}  // namespace

std::unique_ptr<ImageCodec> make_image_codec() { return std::make_unique<OpenCvCodec>(); }

#else

std::unique_ptr<ImageCodec> make_image_codec() { return nullptr; }

#endif

}  // namespace tatm

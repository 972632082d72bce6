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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tatm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed geometry: inverted boxes, non-finite coordinates, boxes outside
/// the frame they are declared in.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file or stream that does not follow its documented schema.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::string source = {}, std::size_t line = 0)
      : Error(decorate(what, source, line)), source_(std::move(source)), line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string decorate(const std::string& what, const std::string& source,
                              std::size_t line) {
    std::string out;
    if (!source.empty()) out += source;
    if (line > 0) out += (out.empty() ? "line " : ":") + std::to_string(line);
    if (!out.empty()) out += ": ";
    return out + what;
  }

  std::string source_;
  std::size_t line_ = 0;
};

/// Failure talking to a detector backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace tatm

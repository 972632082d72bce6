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

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <chrono>
#include <cstring>
#include <map>
#include <thread>

#include "tatm/backend.hpp"
#include "tatm/error.hpp"

namespace tatm {

// The child's stdin and stdout are both one end of a socketpair, which lets us
// write with MSG_NOSIGNAL instead of touching the process-wide SIGPIPE mask.
SubprocessBackend::SubprocessBackend(const std::string& command) {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw BackendError(std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    const int err = errno;
    ::close(fds[0]);
    ::close(fds[1]);
    throw BackendError(std::string("fork: ") + std::strerror(err));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  pid_ = pid;
  to_child_ = fds[0];
  from_child_ = fds[0];

  const auto line = read_line();
  if (!line) {
    shutdown();
    throw BackendError("backend command exited before its handshake: " + command);
  }
  try {
    handshake_ = parse_handshake(*line);
  } catch (const Error& e) {
    shutdown();
    throw BackendError(std::string("bad handshake: ") + e.what());
  }
}

SubprocessBackend::~SubprocessBackend() { shutdown(); }

void SubprocessBackend::shutdown() noexcept {
  if (to_child_ >= 0) {
    ::shutdown(to_child_, SHUT_WR);
  }
  if (pid_ > 0) {
    int status = 0;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
  }
  if (to_child_ >= 0) ::close(to_child_);
  to_child_ = -1;
  from_child_ = -1;
}

void SubprocessBackend::send_line(const std::string& line) {
  std::string payload = line;
  payload.push_back('\n');
  std::size_t off = 0;
  while (off < payload.size()) {
    const ssize_t n = ::send(to_child_, payload.data() + off, payload.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw BackendError(std::string("write to backend failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> SubprocessBackend::read_line() {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (n == 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<UnitResult> SubprocessBackend::detect(const AnnotatedImage& /*image*/,
                                                  std::span<const WorkUnit> units) {
  std::lock_guard lock(mu_);
  if (broken_) throw BackendError("backend process is no longer usable");

  std::map<std::string, std::size_t> pending;
  std::vector<std::optional<UnitResult>> results(units.size());
  std::size_t next = 0;
  std::size_t done = 0;
  const auto window = static_cast<std::size_t>(handshake_.max_in_flight);
  while (done < units.size()) {
    while (next < units.size() && pending.size() < window) {
      if (!pending.emplace(units[next].unit_id, next).second) {
        throw BackendError("duplicate unit_id in one request batch: " + units[next].unit_id);
      }
      send_line(format_request(units[next]));
      ++next;
    }
    const auto line = read_line();
    if (!line) {
      broken_ = true;
      throw BackendError("backend closed its output with " + std::to_string(pending.size()) +
                         " request(s) outstanding");
    }
    UnitResult r;
    try {
      r = parse_response(*line);
    } catch (const FormatError& e) {
      broken_ = true;
      throw BackendError(std::string("bad response: ") + e.what());
    }
    const auto it = pending.find(r.unit_id);
    if (it == pending.end()) {
      broken_ = true;
      throw BackendError("response for unknown unit_id '" + r.unit_id + "'");
    }
    results[it->second] = std::move(r);
    pending.erase(it);
    ++done;
  }
  std::vector<UnitResult> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace tatm

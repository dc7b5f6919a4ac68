/*
 * Copyright 2026 The ensemblecf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "ensemblecf/blackbox.h"
#include "ensemblecf/errors.h"

extern char** environ;

namespace ensemblecf {
namespace {

void WriteAll(int fd, const std::string& data) {
  size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw PredictionError(std::string("write to predictor failed: ") +
                            std::strerror(errno));
    }
    written += static_cast<size_t>(n);
  }
}

}  // namespace

ExternalBlackBox::ExternalBlackBox(ExternalPredictorSpec spec)
    : spec_(std::move(spec)) {
  // A dead child must surface as an error, not kill us.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw PredictionError("pipe() failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw PredictionError("pipe() failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::string command = spec_.command;
  char sh[] = "/bin/sh";
  char dash_c[] = "-c";
  char* argv[] = {sh, dash_c, command.data(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv,
                               environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw PredictionError("cannot start predictor: " +
                          std::string(std::strerror(rc)));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);

  try {
    std::lock_guard<std::mutex> lock(mu_);
    const nlohmann::json reply = Exchange({{"op", "hello"}});
    if (reply.value("op", std::string()) != "hello" ||
        !reply.contains("labels") || !reply["labels"].is_number_integer()) {
      throw PredictionError("predictor handshake failed: " + reply.dump());
    }
    label_count_ = reply["labels"].get<int>();
    if (label_count_ < 2) {
      throw PredictionError("predictor reported fewer than 2 labels");
    }
  } catch (...) {
    Shutdown();
    throw;
  }
}

ExternalBlackBox::~ExternalBlackBox() { Shutdown(); }

void ExternalBlackBox::Shutdown() const {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    // Closing stdin asks a well-behaved server to exit; give it a moment.
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string ExternalBlackBox::ReadLine() const {
  const auto deadline = std::chrono::steady_clock::now() + spec_.timeout;
  for (;;) {
    const size_t newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      throw PredictionError("predictor timed out");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw PredictionError("poll on predictor failed");
    }
    if (ready == 0) throw PredictionError("predictor timed out");
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw PredictionError("read from predictor failed");
    }
    if (n == 0) throw PredictionError("predictor exited");
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

nlohmann::json ExternalBlackBox::Exchange(const nlohmann::json& request) const {
  if (failed_ || to_child_ < 0) {
    throw PredictionError("predictor is no longer usable");
  }
  try {
    WriteAll(to_child_, request.dump() + "\n");
    const std::string line = ReadLine();
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw PredictionError("malformed predictor response: " + line);
    }
    if (!reply.is_object()) {
      throw PredictionError("malformed predictor response: " + line);
    }
    if (reply.value("op", std::string()) == "error") {
      throw PredictionError("predictor error: " +
                            reply.value("msg", std::string("unknown")));
    }
    return reply;
  } catch (const PredictionError&) {
    failed_ = true;
    throw;
  }
}

std::vector<int> ExternalBlackBox::PredictBatch(
    std::span<const Instance> batch) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<int> labels;
  labels.reserve(batch.size());
  const size_t step = std::max<size_t>(1, spec_.max_batch);
  for (size_t begin = 0; begin < batch.size(); begin += step) {
    const size_t end = std::min(batch.size(), begin + step);
    nlohmann::json instances = nlohmann::json::array();
    for (size_t i = begin; i < end; ++i) instances.push_back(batch[i]);
    const nlohmann::json reply =
        Exchange({{"op", "predict"}, {"instances", std::move(instances)}});
    if (reply.value("op", std::string()) != "labels" ||
        !reply.contains("labels") || !reply["labels"].is_array() ||
        reply["labels"].size() != end - begin) {
      failed_ = true;
      throw PredictionError("malformed predictor response: " + reply.dump());
    }
    for (const auto& y : reply["labels"]) {
      if (!y.is_number_integer()) {
        failed_ = true;
        throw PredictionError("non-integer label from predictor");
      }
      const int label = y.get<int>();
      if (label < 0 || label >= label_count_) {
        failed_ = true;
        throw PredictionError("protocol error: label " +
                              std::to_string(label) + " outside [0, " +
                              std::to_string(label_count_) + ")");
      }
      labels.push_back(label);
    }
  }
  return labels;
}

}  // namespace ensemblecf

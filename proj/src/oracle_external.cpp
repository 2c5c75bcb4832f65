/*
 * Copyright 2026 The capfi authors.
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
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "capfi/jsonio.hpp"
#include "capfi/oracle.hpp"
#include "capfi/version.hpp"

namespace capfi::oracle {

namespace {

[[noreturn]] void protocol_fail(const std::string& what, const std::string& line = {}) {
  std::string msg = "oracle protocol: " + what;
  if (!line.empty()) msg += " (offending line: \"" + line + "\")";
  throw ProtocolError(msg);
}

nlohmann::json parse_record(const std::string& line) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    protocol_fail("malformed record", line);
  }
}

}  // namespace

namespace {

void shutdown_child(int pid, int to_child, int from_child) {
  if (to_child >= 0) close(to_child);
  if (from_child >= 0) close(from_child);
  if (pid > 0) {
    // Give the child a moment to exit on EOF, then insist.
    for (int i = 0; i < 200; ++i) {
      int status = 0;
      if (waitpid(pid, &status, WNOHANG) != 0) return;
      usleep(10000);
    }
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);
  }
}

}  // namespace

ExternalOracle::ExternalOracle(const std::string& command, const std::string& expected_layout)
    : command_(command) {
  int to_child[2];    // parent writes -> child stdin
  int from_child[2];  // child stdout -> parent reads
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw ProtocolError("oracle spawn: pipe() failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    throw ProtocolError("oracle spawn: fork() failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = from_child[0];

  // The destructor does not run if the handshake throws; reap the child here.
  try {
    const std::string line = read_line();
    if (line.empty()) protocol_fail("oracle produced no handshake (command: " + command + ")");
    const auto hs = parse_record(line);
    if (hs.value("type", "") != "handshake") protocol_fail("expected handshake record", line);
    if (hs.value("protocol", "") != kOracleProtocol) {
      protocol_fail("unsupported protocol '" + hs.value("protocol", "") + "'", line);
    }
    info_.name = hs.value("name", "external");
    info_.kind = "external";
    info_.version = hs.value("version", "");
    info_.layout = hs.value("layout", "");
    if (info_.layout != expected_layout) {
      protocol_fail("layout mismatch: oracle declares '" + info_.layout + "', run uses '" +
                    expected_layout + "'");
    }
  } catch (...) {
    shutdown_child(pid_, to_child_, from_child_);
    pid_ = -1;
    to_child_ = -1;
    from_child_ = -1;
    throw;
  }
}

ExternalOracle::~ExternalOracle() {
  shutdown_child(pid_, to_child_, from_child_);
}

std::string ExternalOracle::read_line() const {
  for (;;) {
    const auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[4096];
    const ssize_t got = read(from_child_, chunk, sizeof(chunk));
    if (got < 0) {
      if (errno == EINTR) continue;
      protocol_fail("read from oracle failed: " + std::string(std::strerror(errno)));
    }
    if (got == 0) {
      if (read_buffer_.empty()) return {};
      std::string line = std::move(read_buffer_);
      read_buffer_.clear();
      return line;
    }
    read_buffer_.append(chunk, static_cast<size_t>(got));
  }
}

void ExternalOracle::send_line(const std::string& line) const {
  size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = write(to_child_, line.data() + sent, line.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      protocol_fail("write to oracle failed: " + std::string(std::strerror(errno)));
    }
    sent += static_cast<size_t>(n);
  }
}

void ExternalOracle::predict(const FeatureMatrix& rows, std::span<double> out_scores) const {
  if (out_scores.size() != rows.rows) {
    throw ConfigError("external oracle: output span size mismatch");
  }
  for (size_t i = 0; i < rows.rows; ++i) {
    const uint64_t id = next_id_++;
    std::string line = "{\"type\":\"request\",\"id\":" + std::to_string(id) + ",\"features\":[";
    const double* r = rows.row(i);
    for (size_t j = 0; j < rows.cols; ++j) {
      if (j != 0) line += ',';
      line += jsonio::format_double(r[j]);
    }
    line += "]}\n";
    send_line(line);

    const std::string reply = read_line();
    if (reply.empty()) {
      protocol_fail("oracle stream ended after " + std::to_string(i) + " of " +
                    std::to_string(rows.rows) + " responses");
    }
    const auto rec = parse_record(reply);
    if (rec.value("type", "") != "response") protocol_fail("expected response record", reply);
    if (!rec.contains("id") || rec["id"].get<uint64_t>() != id) {
      protocol_fail("response id mismatch (expected " + std::to_string(id) + ")", reply);
    }
    if (!rec.contains("score") || !rec["score"].is_number()) {
      protocol_fail("response lacks a numeric score", reply);
    }
    const double score = rec["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) protocol_fail("score out of [0,1]", reply);
    out_scores[i] = score;
  }
}

}  // namespace capfi::oracle

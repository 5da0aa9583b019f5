// SPDX-License-Identifier: Apache-2.0
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <mutex>

#include "ipd/agent.hpp"
#include "ipd/error.hpp"

namespace ipd {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<Action> parse_move_line(const std::string& line) {
  auto j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (j.value("type", "") != "move") return std::nullopt;
  auto it = j.find("action");
  if (it == j.end() || !it->is_string()) return std::nullopt;
  auto a = it->get<std::string>();
  if (a == "C") return Action::C;
  if (a == "D") return Action::D;
  return std::nullopt;
}

}  // namespace

Json move_request_json(const History& h, const PayoffMatrix& m, std::optional<int> known_rounds) {
  Json history = Json::array();
  for (const auto& e : h) {
    history.push_back(Json::array({std::string(1, to_char(e.self)), std::string(1, to_char(e.opp))}));
  }
  Json horizon = known_rounds ? Json{{"kind", "fixed"}, {"rounds", *known_rounds}} : Json(nullptr);
  return Json{{"type", "move_request"},
              {"round", h.size() + 1},
              {"history", std::move(history)},
              {"payoffs", m},
              {"horizon", std::move(horizon)}};
}

SubprocessAgent::SubprocessAgent(AgentEndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind != AgentKind::Subprocess) {
    fail(ErrorCode::AgentFailure, "SubprocessAgent needs a subprocess endpoint");
  }
  ignore_sigpipe();
}

SubprocessAgent::~SubprocessAgent() { stop(); }

void SubprocessAgent::start() {
  int in[2];
  int out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) fail(ErrorCode::AgentFailure, "pipe() failed");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    fail(ErrorCode::AgentFailure, "pipe() failed");
  }
  const char* command = cfg_.address.c_str();
  pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
    fail(ErrorCode::AgentFailure, "fork() failed");
  }
  if (pid == 0) {
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command, static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  buffer_.clear();
}

void SubprocessAgent::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
  buffer_.clear();
}

std::optional<std::string> SubprocessAgent::exchange(const std::string& line) {
  if (!write_all(to_child_, line + "\n")) return std::nullopt;
  const auto deadline = std::chrono::steady_clock::now() + cfg_.timeout;
  while (true) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string out = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return out;
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return std::nullopt;
    pollfd pfd{from_child_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return std::nullopt;
    char chunk[4096];
    ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

MoveResult SubprocessAgent::step(const History& h, const PayoffMatrix& m,
                                 std::optional<int> known_rounds) {
  const std::string request = move_request_json(h, m, known_rounds).dump();
  const auto t0 = std::chrono::steady_clock::now();
  std::string last_reply;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (pid_ < 0) start();
    auto reply = exchange(request);
    if (reply) {
      last_reply = *reply;
      if (auto a = parse_move_line(*reply)) {
        MoveResult r;
        r.action = *a;
        r.raw = *reply;
        r.retry_count = attempt;
        r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0);
        return r;
      }
    }
    // Protocol violation, timeout or exit: restart before the next attempt.
    stop();
    ++restarts_;
  }
  fail(ErrorCode::AgentFailure,
       "subprocess agent violated the move protocol; last reply: \"" + last_reply.substr(0, 120) +
           "\"");
}

}  // namespace ipd

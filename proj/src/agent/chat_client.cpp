// SPDX-License-Identifier: Apache-2.0
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <regex>

#include "httplib.h"
#include "ipd/agent.hpp"
#include "ipd/error.hpp"

namespace ipd {

namespace {

class InFlightLimiter {
 public:
  void set_limit(int n) {
    std::lock_guard lock(mu_);
    limit_ = std::max(1, n);
    cv_.notify_all();
  }
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
  }
  void release() {
    std::lock_guard lock(mu_);
    --active_;
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_ = 4;
  int active_ = 0;
};

InFlightLimiter& limiter() {
  static InFlightLimiter l;
  return l;
}

struct Slot {
  Slot() { limiter().acquire(); }
  ~Slot() { limiter().release(); }
};

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    fail(ErrorCode::AgentFailure, "endpoint is not an http(s) URL: " + url);
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

// Returns the assistant content or an error description.
struct Reply {
  std::optional<std::string> content;
  std::string error;
};

Reply post_chat(const AgentEndpointConfig& cfg, const Endpoint& ep,
                const std::vector<ChatMessage>& messages) {
  Json body{{"model", cfg.model_name}, {"messages", messages}, {"temperature", cfg.temperature}};

  httplib::Headers headers;
  if (!cfg.credentials_env.empty()) {
    const char* key = std::getenv(cfg.credentials_env.c_str());
    if (!key || !*key) {
      fail(ErrorCode::AgentFailure, "credential variable " + cfg.credentials_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  httplib::Client client(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  Slot slot;
  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) return {std::nullopt, "transport error: " + httplib::to_string(res.error())};
  if (res->status != 200) return {std::nullopt, "HTTP status " + std::to_string(res->status)};
  auto j = Json::parse(res->body, nullptr, false);
  try {
    if (!j.is_discarded()) {
      return {j.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
    }
  } catch (const Json::exception&) {
  }
  return {std::nullopt, "response is not a chat completion"};
}

}  // namespace

void set_max_in_flight_requests(int n) { limiter().set_limit(n); }

MoveResult request_move(const AgentEndpointConfig& cfg, std::vector<ChatMessage> messages) {
  if (cfg.kind != AgentKind::ChatHttp) {
    fail(ErrorCode::AgentFailure, "request_move needs a chat_http endpoint");
  }
  const auto ep = split_url(cfg.address);
  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  std::string last_raw;

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    auto reply = post_chat(cfg, ep, messages);
    if (!reply.content) {
      last_error = reply.error;
      continue;
    }
    last_raw = *reply.content;
    try {
      Action a = parse_action(last_raw);
      MoveResult r;
      r.action = a;
      r.raw = last_raw;
      r.retry_count = attempt;
      r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      r.messages = std::move(messages);
      return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableResponse) throw;
      last_error = e.what();
      messages.push_back({"assistant", last_raw});
      messages.push_back({"user", std::string(kClarification)});
    }
  }
  std::string msg = "agent at " + ep.origin + " failed after " +
                    std::to_string(cfg.max_retries + 1) + " attempt(s): " + last_error;
  fail(ErrorCode::AgentFailure, msg);
}

}  // namespace ipd

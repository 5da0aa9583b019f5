// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace ipd::test {

// Minimal chat-completions endpoint on 127.0.0.1. Replies are served from a
// queue; the last one repeats once the queue drains.
class ChatStub {
 public:
  ChatStub() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::string content;
      int status = 200;
      {
        std::lock_guard lock(mu_);
        requests_.push_back(nlohmann::json::parse(req.body));
        auth_.push_back(req.get_header_value("Authorization"));
        if (!replies_.empty()) {
          content = replies_.front();
          if (replies_.size() > 1) replies_.pop_front();
        }
        status = status_;
      }
      res.status = status;
      nlohmann::json body{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ChatStub() {
    server_.stop();
    thread_.join();
  }

  void reply(std::vector<std::string> r) {
    std::lock_guard lock(mu_);
    replies_.assign(r.begin(), r.end());
  }
  void status(int s) {
    std::lock_guard lock(mu_);
    status_ = s;
  }
  std::vector<nlohmann::json> requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<std::string> replies_{"cooperate"};
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> auth_;
  int status_ = 200;
};

}  // namespace ipd::test

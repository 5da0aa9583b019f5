// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ipd/game.hpp"
#include "ipd/strategy.hpp"

namespace ipd::session {

struct SessionConfig {
  StrategySpec opponent;
  PayoffMatrix matrix = PayoffMatrix::classic();
  Horizon horizon = Horizon::fixed(50);
  bool reveal_opponent = false;
  std::string participant_label;
  std::optional<std::uint64_t> seed;  // drawn at creation when absent
};

SessionConfig session_config_from_json(const Json& j);  // ConfigError
Json to_json(const SessionConfig& c);

enum class SessionState { AwaitingHuman, Finished, Aborted };
std::string_view state_name(SessionState s);

struct MoveResponse {
  RoundOutcome outcome;  // human is side a
  Json view;
  bool duplicate = false;
};

// Human-perspective JSON for a resolved round.
Json outcome_json(const RoundOutcome& o);

using Clock = std::function<std::chrono::system_clock::time_point()>;

struct ManagerOptions {
  std::filesystem::path state_dir;  // empty: no persistence
  std::chrono::seconds idle_timeout{30 * 60};
  Clock clock;                      // defaults to the system clock
  int report_window = 5;
  double report_epsilon = 0.1;
};

// Hosts live sessions. The opponent's move for the pending round is drawn and
// stored before the human moves and is never part of any view. Every state
// change is appended to <state_dir>/<id>.jsonl; constructing a manager over
// an existing state_dir replays those logs.
class SessionManager {
 public:
  explicit SessionManager(ManagerOptions opts = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  // Returns {id, view}. Throws ConfigError.
  std::pair<std::string, Json> create_session(const SessionConfig& cfg);

  // Throws SessionNotFound, WrongRound, SessionFinished. Resubmitting a
  // resolved round returns the stored outcome and changes nothing.
  MoveResponse submit_move(const std::string& id, int round, Action action);

  Json view(const std::string& id);

  // Throws SessionNotFound, SessionStillActive.
  MatchRecord finalize(const std::string& id);

  // Record plus cooperation rate and, for switch opponents, the adaptation
  // report (or the reason it is unavailable).
  Json report(const std::string& id);

  void abort(const std::string& id, const std::string& reason);

  // Aborts sessions idle longer than the timeout; returns how many.
  int expire_idle();

  std::vector<std::string> session_ids() const;

  // Blocks until the session's version exceeds `since` or the timeout
  // passes; returns the current version.
  std::uint64_t wait_for_change(const std::string& id, std::uint64_t since,
                                std::chrono::milliseconds timeout);
  std::uint64_t version(const std::string& id);

  // Wakes all waiters; later waits return immediately.
  void shutdown();

  struct Session;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void recover();

  ManagerOptions opts_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex wait_mu_;
  std::condition_variable wait_cv_;
  bool stopping_ = false;
};

// Blocking HTTP+SSE front end over a SessionManager.
class SessionServer {
 public:
  // static_dir: directory served at "/" when it holds index.html; otherwise a
  // built-in page is served.
  SessionServer(SessionManager& manager, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~SessionServer();

  // Throws BindError. Port 0 picks a free port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ipd::session

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "ipd/error.hpp"
#include "ipd/json_util.hpp"
#include "ipd/metrics.hpp"
#include "ipd/session.hpp"

namespace ipd::session {

namespace fs = std::filesystem;
using TimePoint = std::chrono::system_clock::time_point;

namespace {

std::int64_t epoch_ms(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

TimePoint from_epoch_ms(std::int64_t ms) { return TimePoint(std::chrono::milliseconds(ms)); }

std::string random_id() {
  std::random_device rd;
  std::ostringstream os;
  os << std::hex;
  for (int i = 0; i < 4; ++i) {
    os.width(8);
    os.fill('0');
    os << rd();
  }
  return os.str();
}

std::uint64_t random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

SessionConfig session_config_from_json(const Json& j) {
  json_util::expect_keys(j, "session config", {"opponent"},
                         {"payoffs", "horizon", "reveal_opponent", "participant_label", "seed"});
  SessionConfig c;
  c.opponent = spec_from_json(j["opponent"]);
  if (j.contains("payoffs")) c.matrix = payoffs_from_json(j["payoffs"]);
  if (j.contains("horizon")) c.horizon = horizon_from_json(j["horizon"]);
  if (j.contains("reveal_opponent")) c.reveal_opponent = json_util::boolean(j, "reveal_opponent");
  if (j.contains("participant_label")) c.participant_label = json_util::string(j, "participant_label");
  if (j.contains("seed")) c.seed = json_util::unsigned64(j, "seed");
  return c;
}

Json to_json(const SessionConfig& c) {
  Json j{{"opponent", c.opponent},
         {"payoffs", c.matrix},
         {"horizon", c.horizon},
         {"reveal_opponent", c.reveal_opponent},
         {"participant_label", c.participant_label}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

std::string_view state_name(SessionState s) {
  switch (s) {
    case SessionState::AwaitingHuman: return "awaiting_human";
    case SessionState::Finished: return "finished";
    case SessionState::Aborted: return "aborted";
  }
  return "unknown";
}

Json outcome_json(const RoundOutcome& o) {
  return Json{{"round", o.round_index},
              {"human", std::string(1, to_char(o.action_a))},
              {"opponent", std::string(1, to_char(o.action_b))},
              {"human_payoff", score_to_json(o.payoff_a)},
              {"opponent_payoff", score_to_json(o.payoff_b)}};
}

struct SessionManager::Session {
  Session(std::string id_, SessionConfig cfg_)
      : id(std::move(id_)),
        cfg(std::move(cfg_)),
        horizon_rng(*cfg.seed, "horizon"),
        opponent_rng(*cfg.seed, "player_b") {}

  std::mutex mu;
  std::string id;
  SessionConfig cfg;
  std::string opponent_id;
  SessionState state = SessionState::AwaitingHuman;
  std::string abort_reason;
  bool agent_failed = false;
  bool finalized = false;
  std::unique_ptr<Player> opponent;
  MatchInfo info;
  GameRng horizon_rng;
  GameRng opponent_rng;
  History opponent_history;
  std::vector<RoundOutcome> rounds;
  Score total_human = 0;
  Score total_opponent = 0;
  std::optional<Action> committed;
  TimePoint created;
  TimePoint updated;
  std::ofstream log;
  std::atomic<std::uint64_t> version{0};
  std::shared_ptr<const Json> snapshot;

  bool replays_opponent() const { return cfg.opponent.name != "external_agent"; }

  void append(const Json& event) {
    if (!log.is_open()) return;
    log << event.dump() << '\n';
    log.flush();
  }

  Json build_view() const {
    Json history = Json::array();
    for (const auto& o : rounds) history.push_back(outcome_json(o));
    Json v{{"id", id},
           {"state", state_name(state)},
           {"round", state == SessionState::AwaitingHuman ? static_cast<int>(rounds.size()) + 1
                                                           : static_cast<int>(rounds.size())},
           {"rounds_played", rounds.size()},
           {"history", std::move(history)},
           {"scores", {{"human", score_to_json(total_human)}, {"opponent", score_to_json(total_opponent)}}},
           {"payoffs", cfg.matrix},
           {"participant_label", cfg.participant_label}};
    if (auto n = cfg.horizon.disclosed_rounds()) {
      v["horizon_note"] = "The game lasts " + std::to_string(*n) + " rounds.";
    } else {
      v["horizon_note"] = nullptr;
    }
    if (cfg.reveal_opponent) v["opponent"] = opponent_id;
    if (state == SessionState::Aborted) v["abort_reason"] = abort_reason;
    return v;
  }

  void publish() {
    std::atomic_store(&snapshot, std::make_shared<const Json>(build_view()));
    ++version;
  }

  void set_aborted(const std::string& reason, TimePoint now, bool log_it = true) {
    state = SessionState::Aborted;
    abort_reason = reason;
    committed.reset();
    updated = now;
    if (log_it) append({{"type", "aborted"}, {"reason", reason}, {"at", epoch_ms(now)}});
  }

  // Draws the opponent's move for the pending round. `stored` is the logged
  // move when replaying.
  void commit(TimePoint now, std::optional<Action> stored, bool log_it) {
    const int round = static_cast<int>(rounds.size()) + 1;
    std::optional<Action> move;
    if (stored && !replays_opponent()) {
      move = stored;
    } else {
      try {
        move = opponent->choose(opponent_history, info, opponent_rng);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AgentFailure) throw;
        agent_failed = true;
        set_aborted(std::string("agent_failure: ") + e.what(), now, log_it);
        return;
      }
      if (stored && *stored != *move) {
        fail(ErrorCode::IoError, "session " + id + ": replayed opponent move differs at round " +
                                     std::to_string(round));
      }
    }
    committed = move;
    if (log_it) {
      append({{"type", "commit"},
              {"round", round},
              {"opponent_action", std::string(1, to_char(*move))},
              {"at", epoch_ms(now)}});
    }
  }

  // Resolves the pending round; returns whether another round follows.
  bool resolve(Action human, TimePoint now, bool log_it) {
    const Action opp = *committed;
    committed.reset();
    auto [ph, po] = payoff(cfg.matrix, human, opp);
    RoundOutcome o{static_cast<int>(rounds.size()) + 1, human, opp, ph, po};
    rounds.push_back(o);
    total_human += ph;
    total_opponent += po;
    opponent_history.push_back({opp, human});
    updated = now;
    if (log_it) {
      append({{"type", "move"},
              {"round", o.round_index},
              {"human_action", std::string(1, to_char(human))},
              {"outcome", outcome_json(o)},
              {"at", epoch_ms(now)}});
    }
    const bool more = should_continue(cfg.horizon, static_cast<int>(rounds.size()), horizon_rng);
    if (!more) {
      state = SessionState::Finished;
      if (log_it) append({{"type", "finished"}, {"at", epoch_ms(now)}});
    }
    return more;
  }

  bool idle_expired(TimePoint now, std::chrono::seconds timeout) const {
    return state == SessionState::AwaitingHuman && now - updated > timeout;
  }

  MatchRecord record() const {
    MatchRecord r;
    r.player_a_id = "human";
    r.player_b_id = opponent_id;
    r.payoffs = cfg.matrix;
    r.horizon = cfg.horizon;
    r.seed = *cfg.seed;
    r.rounds = rounds;
    r.total_a = total_human;
    r.total_b = total_opponent;
    r.metadata = opponent->metadata();
    r.metadata["participant_label"] = cfg.participant_label;
    r.metadata["session_id"] = id;
    if (state == SessionState::Aborted) {
      r.metadata["aborted"] = "true";
      r.metadata["abort_reason"] = abort_reason;
      if (agent_failed) {
        r.metadata["status"] = "agent_failure";
        r.metadata["failure"] = abort_reason;
      }
    }
    return r;
  }
};

namespace {

std::unique_ptr<Player> make_opponent(const SessionConfig& cfg) {
  try {
    auto p = make_strategy(cfg.opponent);
    p->set_id(cfg.opponent.label());
    return p;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownStrategy || e.code() == ErrorCode::InvalidParams) {
      fail(ErrorCode::ConfigError, std::string("opponent: ") + e.what());
    }
    throw;
  }
}

}  // namespace

SessionManager::SessionManager(ManagerOptions opts) : opts_(std::move(opts)) {
  if (!opts_.clock) opts_.clock = [] { return std::chrono::system_clock::now(); };
  if (!opts_.state_dir.empty()) {
    std::error_code ec;
    fs::create_directories(opts_.state_dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create state directory " + opts_.state_dir.string());
    recover();
  }
}

SessionManager::~SessionManager() { shutdown(); }

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(map_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::SessionNotFound, "no session " + id);
  return it->second;
}

std::pair<std::string, Json> SessionManager::create_session(const SessionConfig& cfg_in) {
  SessionConfig cfg = cfg_in;
  if (!cfg.seed) cfg.seed = random_seed();
  auto opponent = make_opponent(cfg);

  std::string id = random_id();
  auto s = std::make_shared<Session>(id, cfg);
  s->opponent = std::move(opponent);
  s->opponent_id = cfg.opponent.label();
  s->info = MatchInfo{cfg.matrix, cfg.horizon.disclosed_rounds()};
  const auto now = opts_.clock();
  s->created = s->updated = now;

  std::lock_guard lock(s->mu);
  if (!opts_.state_dir.empty()) {
    s->log.open(opts_.state_dir / (id + ".jsonl"), std::ios::app);
    if (!s->log) fail(ErrorCode::IoError, "cannot open session log for " + id);
  }
  s->append({{"type", "created"}, {"session_id", id}, {"config", to_json(cfg)}, {"at", epoch_ms(now)}});
  s->opponent->begin_match(s->info);
  s->commit(now, std::nullopt, true);
  s->publish();
  {
    std::unique_lock map_lock(map_mu_);
    sessions_[id] = s;
  }
  return {id, *std::atomic_load(&s->snapshot)};
}

MoveResponse SessionManager::submit_move(const std::string& id, int round, Action action) {
  auto s = find(id);
  MoveResponse resp;
  {
    std::lock_guard lock(s->mu);
    const auto now = opts_.clock();
    if (round >= 1 && round <= static_cast<int>(s->rounds.size())) {
      resp.outcome = s->rounds[round - 1];
      resp.duplicate = true;
      resp.view = *std::atomic_load(&s->snapshot);
      return resp;
    }
    if (s->idle_expired(now, opts_.idle_timeout)) {
      s->set_aborted("idle_timeout", now);
      s->publish();
    }
    if (s->state != SessionState::AwaitingHuman) {
      fail(ErrorCode::SessionFinished, "session " + id + " is " + std::string(state_name(s->state)));
    }
    const int expected = static_cast<int>(s->rounds.size()) + 1;
    if (round != expected) {
      fail(ErrorCode::WrongRound, "round " + std::to_string(round) + " submitted while round " +
                                      std::to_string(expected) + " is pending");
    }
    if (s->resolve(action, now, true)) s->commit(now, std::nullopt, true);
    resp.outcome = s->rounds.back();
    s->publish();
    resp.view = *std::atomic_load(&s->snapshot);
  }
  wait_cv_.notify_all();
  return resp;
}

Json SessionManager::view(const std::string& id) { return *std::atomic_load(&find(id)->snapshot); }

MatchRecord SessionManager::finalize(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->state == SessionState::AwaitingHuman) {
    fail(ErrorCode::SessionStillActive, "session " + id + " is still awaiting moves");
  }
  if (!s->finalized) {
    s->finalized = true;
    s->append({{"type", "finalized"}, {"at", epoch_ms(opts_.clock())}});
  }
  return s->record();
}

Json SessionManager::report(const std::string& id) {
  const auto record = finalize(id);
  std::int64_t coop = 0;
  for (const auto& o : record.rounds) coop += o.action_a == Action::C;
  Json out{{"record", record},
           {"rounds", record.rounds.size()},
           {"totals", {{"human", score_to_json(record.total_a)}, {"opponent", score_to_json(record.total_b)}}},
           {"cooperation_rate", record.rounds.empty() ? Json(nullptr)
                                                      : Json(static_cast<double>(coop) / record.rounds.size())},
           {"aborted", record.metadata.count("aborted") > 0},
           {"adaptation", nullptr}};
  if (record.metadata.count("switch_round")) {
    try {
      const std::vector<MatchRecord> one{record};
      out["adaptation"] = metrics::to_json(
          metrics::adaptation_report(one, "human", opts_.report_window, opts_.report_epsilon));
    } catch (const Error& e) {
      out["adaptation_error"] = e.what();
    }
  }
  return out;
}

void SessionManager::abort(const std::string& id, const std::string& reason) {
  auto s = find(id);
  {
    std::lock_guard lock(s->mu);
    if (s->state != SessionState::AwaitingHuman) return;
    s->set_aborted(reason.empty() ? "aborted" : reason, opts_.clock());
    s->publish();
  }
  wait_cv_.notify_all();
}

int SessionManager::expire_idle() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::shared_lock lock(map_mu_);
    for (const auto& [_, s] : sessions_) all.push_back(s);
  }
  int n = 0;
  const auto now = opts_.clock();
  for (auto& s : all) {
    std::lock_guard lock(s->mu);
    if (s->idle_expired(now, opts_.idle_timeout)) {
      s->set_aborted("idle_timeout", now);
      s->publish();
      ++n;
    }
  }
  if (n > 0) wait_cv_.notify_all();
  return n;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(map_mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::uint64_t SessionManager::version(const std::string& id) { return find(id)->version.load(); }

std::uint64_t SessionManager::wait_for_change(const std::string& id, std::uint64_t since,
                                              std::chrono::milliseconds timeout) {
  auto s = find(id);
  std::unique_lock lock(wait_mu_);
  wait_cv_.wait_for(lock, timeout, [&] { return stopping_ || s->version.load() > since; });
  return s->version.load();
}

void SessionManager::shutdown() {
  {
    std::lock_guard lock(wait_mu_);
    stopping_ = true;
  }
  wait_cv_.notify_all();
}

void SessionManager::recover() {
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(opts_.state_dir)) {
    if (entry.path().extension() == ".jsonl" && valid_id(entry.path().stem().string())) {
      logs.push_back(entry.path());
    }
  }
  std::sort(logs.begin(), logs.end());

  for (const auto& path : logs) {
    std::ifstream in(path);
    std::vector<Json> events;
    std::string line;
    while (std::getline(in, line)) {
      auto j = Json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) break;  // torn final write
      events.push_back(std::move(j));
    }
    try {
      if (events.empty() || events.front().value("type", "") != "created") {
        fail(ErrorCode::IoError, "log does not start with a created event");
      }
      const auto& created = events.front();
      const std::string id = created.at("session_id").get<std::string>();
      auto cfg = session_config_from_json(created.at("config"));
      auto s = std::make_shared<Session>(id, cfg);
      s->opponent = make_opponent(cfg);
      s->opponent_id = cfg.opponent.label();
      s->info = MatchInfo{cfg.matrix, cfg.horizon.disclosed_rounds()};
      s->created = s->updated = from_epoch_ms(created.at("at").get<std::int64_t>());
      s->opponent->begin_match(s->info);

      bool need_commit = true;
      for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& e = events[i];
        const auto type = e.at("type").get<std::string>();
        const auto at = from_epoch_ms(e.at("at").get<std::int64_t>());
        if (type == "commit") {
          s->commit(at, action_from_string(e.at("opponent_action").get<std::string>()), false);
          need_commit = false;
        } else if (type == "move") {
          if (!s->committed) fail(ErrorCode::IoError, "move without a committed opponent move");
          need_commit = s->resolve(action_from_string(e.at("human_action").get<std::string>()), at, false);
        } else if (type == "finished") {
          s->state = SessionState::Finished;
        } else if (type == "aborted") {
          s->set_aborted(e.at("reason").get<std::string>(), at, false);
          s->agent_failed = s->abort_reason.rfind("agent_failure", 0) == 0;
        } else if (type == "finalized") {
          s->finalized = true;
        }
      }
      s->log.open(path, std::ios::app);
      if (s->state == SessionState::AwaitingHuman && need_commit) s->commit(s->updated, std::nullopt, true);
      s->publish();
      sessions_[id] = s;
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping session log " << path.string() << ": " << e.what() << "\n";
    }
  }
}

}  // namespace ipd::session

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace ipd {

using Json = nlohmann::json;

// Scores are doubles; integer-valued matrices stay exact well past any
// realistic match length.
using Score = double;

enum class Action : std::uint8_t { C, D };

char to_char(Action a);
Action action_from_string(std::string_view s);
inline Action flip(Action a) { return a == Action::C ? Action::D : Action::C; }

class PayoffMatrix {
 public:
  // Throws OrderingViolation unless H > R > P > L and H + L < 2R.
  static PayoffMatrix validate(Score H, Score R, Score P, Score L);
  static PayoffMatrix classic() { return validate(5, 3, 1, 0); }

  Score H() const { return h_; }
  Score R() const { return r_; }
  Score P() const { return p_; }
  Score L() const { return l_; }

  bool integral() const;

  friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;

 private:
  PayoffMatrix(Score h, Score r, Score p, Score l) : h_(h), r_(r), p_(p), l_(l) {}
  Score h_, r_, p_, l_;
};

// Returns (self payoff, opponent payoff).
std::pair<Score, Score> payoff(const PayoffMatrix& m, Action self, Action opp);

struct FixedHorizon {
  int rounds = 50;
  bool known_to_players = true;
  friend bool operator==(const FixedHorizon&, const FixedHorizon&) = default;
};

struct IndefiniteHorizon {
  double stop_probability = 0.05;
  int max_rounds = 10000;
  friend bool operator==(const IndefiniteHorizon&, const IndefiniteHorizon&) = default;
};

class Horizon {
 public:
  static Horizon fixed(int rounds, bool known_to_players = true);
  static Horizon indefinite(double stop_probability, int max_rounds = 10000);

  bool is_fixed() const { return std::holds_alternative<FixedHorizon>(kind_); }
  const FixedHorizon* as_fixed() const { return std::get_if<FixedHorizon>(&kind_); }
  const IndefiniteHorizon* as_indefinite() const { return std::get_if<IndefiniteHorizon>(&kind_); }

  // Total round count when players are told it, otherwise nullopt.
  std::optional<int> disclosed_rounds() const;
  int max_rounds() const;

  friend bool operator==(const Horizon&, const Horizon&) = default;

 private:
  explicit Horizon(std::variant<FixedHorizon, IndefiniteHorizon> k) : kind_(k) {}
  std::variant<FixedHorizon, IndefiniteHorizon> kind_;
};

// Deterministic random stream keyed by (seed, label). The engine is
// std::mt19937_64, whose output sequence is fixed by the standard; uniform
// doubles are built from the top 53 bits so results do not depend on the
// standard library's distribution implementations.
class GameRng {
 public:
  GameRng(std::uint64_t seed, std::string label);

  std::uint64_t next() { return engine_(); }
  double uniform();

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

struct RoundOutcome {
  int round_index = 0;
  Action action_a = Action::C;
  Action action_b = Action::C;
  Score payoff_a = 0;
  Score payoff_b = 0;
  friend bool operator==(const RoundOutcome&, const RoundOutcome&) = default;
};

struct MatchRecord {
  std::string player_a_id;
  std::string player_b_id;
  PayoffMatrix payoffs = PayoffMatrix::classic();
  Horizon horizon = Horizon::fixed(50);
  std::uint64_t seed = 0;
  std::vector<RoundOutcome> rounds;
  Score total_a = 0;
  Score total_b = 0;
  std::map<std::string, std::string> metadata;

  bool failed() const;
  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

inline constexpr int kRecordSchemaVersion = 1;

void to_json(Json& j, const PayoffMatrix& m);
PayoffMatrix payoffs_from_json(const Json& j);
void to_json(Json& j, const Horizon& h);
Horizon horizon_from_json(const Json& j);
void to_json(Json& j, const MatchRecord& r);
MatchRecord record_from_json(const Json& j, int reader_version = kRecordSchemaVersion);

// One JSONL line, no trailing newline.
std::string record_to_line(const MatchRecord& r);

// JSON number for a score: integral values are written without a fraction.
Json score_to_json(Score s);

// Perspective-local history: each entry is (own action, opponent action).
struct HistoryEntry {
  Action self;
  Action opp;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};
using History = std::vector<HistoryEntry>;

struct MatchInfo {
  PayoffMatrix payoffs = PayoffMatrix::classic();
  std::optional<int> known_rounds;
};

class Player {
 public:
  virtual ~Player() = default;

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  virtual void begin_match(const MatchInfo&) {}

  // Chooses the action for round history.size() + 1. Must not see the
  // opponent's current-round move.
  virtual Action choose(const History& h, const MatchInfo& info, GameRng& rng) = 0;

  // Keys merged into the MatchRecord metadata (e.g. switch_round).
  virtual std::map<std::string, std::string> metadata() const { return {}; }

  // Per-round audit lines for external agents; empty for built-ins.
  virtual std::vector<Json> transcript() const { return {}; }

 private:
  std::string id_;
};

// Indefinite horizons draw from rng; fixed horizons never do.
bool should_continue(const Horizon& h, int completed_rounds, GameRng& rng);

MatchRecord play_match(Player& a, Player& b, const PayoffMatrix& m, const Horizon& h,
                       std::uint64_t seed);

struct CumulativePoint {
  int round;
  Score cum_a;
  Score cum_b;
  Score cum_diff;
};
std::vector<CumulativePoint> cumulative_series(const MatchRecord& r);

// Perspective-flipped history for player b.
History history_for(const MatchRecord& r, bool as_player_a);

}  // namespace ipd

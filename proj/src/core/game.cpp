// SPDX-License-Identifier: Apache-2.0
#include "ipd/game.hpp"

#include <cmath>
#include <limits>

#include "ipd/error.hpp"

namespace ipd {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::OrderingViolation: return "OrderingViolation";
    case ErrorCode::AgentFailure: return "AgentFailure";
    case ErrorCode::UnknownStrategy: return "UnknownStrategy";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::TemplateError: return "TemplateError";
    case ErrorCode::UnparseableResponse: return "UnparseableResponse";
    case ErrorCode::UnknownPlayer: return "UnknownPlayer";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::MissingSwitchMetadata: return "MissingSwitchMetadata";
    case ErrorCode::InsufficientRounds: return "InsufficientRounds";
    case ErrorCode::MixedHorizons: return "MixedHorizons";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::MissingSeries: return "MissingSeries";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::WrongRound: return "WrongRound";
    case ErrorCode::SessionFinished: return "SessionFinished";
    case ErrorCode::SessionStillActive: return "SessionStillActive";
    case ErrorCode::BindError: return "BindError";
  }
  return "Unknown";
}

char to_char(Action a) { return a == Action::C ? 'C' : 'D'; }

Action action_from_string(std::string_view s) {
  if (s == "C") return Action::C;
  if (s == "D") return Action::D;
  fail(ErrorCode::InvalidParams, "action must be \"C\" or \"D\", got \"" + std::string(s) + "\"");
}

PayoffMatrix PayoffMatrix::validate(Score H, Score R, Score P, Score L) {
  for (Score v : {H, R, P, L}) {
    if (!std::isfinite(v)) fail(ErrorCode::OrderingViolation, "payoff values must be finite");
  }
  if (!(H > R)) fail(ErrorCode::OrderingViolation, "H > R violated");
  if (!(R > P)) fail(ErrorCode::OrderingViolation, "R > P violated");
  if (!(P > L)) fail(ErrorCode::OrderingViolation, "P > L violated");
  if (!(H + L < 2 * R)) fail(ErrorCode::OrderingViolation, "H + L < 2R violated");
  return PayoffMatrix(H, R, P, L);
}

bool PayoffMatrix::integral() const {
  for (Score v : {h_, r_, p_, l_}) {
    if (v != std::floor(v)) return false;
  }
  return true;
}

std::pair<Score, Score> payoff(const PayoffMatrix& m, Action self, Action opp) {
  if (self == Action::C) {
    return opp == Action::C ? std::pair{m.R(), m.R()} : std::pair{m.L(), m.H()};
  }
  return opp == Action::C ? std::pair{m.H(), m.L()} : std::pair{m.P(), m.P()};
}

Horizon Horizon::fixed(int rounds, bool known_to_players) {
  if (rounds < 1) fail(ErrorCode::ConfigError, "fixed horizon needs rounds >= 1");
  return Horizon(FixedHorizon{rounds, known_to_players});
}

Horizon Horizon::indefinite(double stop_probability, int max_rounds) {
  if (!(stop_probability > 0.0 && stop_probability < 1.0)) {
    fail(ErrorCode::ConfigError, "stop_probability must lie in (0, 1)");
  }
  if (max_rounds < 1) fail(ErrorCode::ConfigError, "max_rounds must be >= 1");
  return Horizon(IndefiniteHorizon{stop_probability, max_rounds});
}

std::optional<int> Horizon::disclosed_rounds() const {
  if (const auto* f = as_fixed(); f && f->known_to_players) return f->rounds;
  return std::nullopt;
}

int Horizon::max_rounds() const {
  if (const auto* f = as_fixed()) return f->rounds;
  return as_indefinite()->max_rounds;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

GameRng::GameRng(std::uint64_t seed, std::string label)
    : seed_(seed),
      label_(std::move(label)),
      engine_(splitmix64(splitmix64(seed) ^ fnv1a64(label_))) {}

double GameRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool MatchRecord::failed() const {
  auto it = metadata.find("status");
  return it != metadata.end() && it->second == "agent_failure";
}

bool should_continue(const Horizon& h, int completed_rounds, GameRng& rng) {
  if (const auto* f = h.as_fixed()) return completed_rounds < f->rounds;
  const auto* ind = h.as_indefinite();
  if (completed_rounds == 0) return true;
  if (completed_rounds >= ind->max_rounds) return false;
  return rng.uniform() >= ind->stop_probability;
}

namespace {

void merge_metadata(MatchRecord& rec, const Player& a, const Player& b) {
  auto ma = a.metadata();
  auto mb = b.metadata();
  for (const auto& [k, v] : ma) {
    auto it = mb.find(k);
    if (it == mb.end() || it->second == v) {
      rec.metadata[k] = v;
    } else {
      rec.metadata["a." + k] = v;
      rec.metadata["b." + k] = it->second;
    }
  }
  for (const auto& [k, v] : mb) {
    if (!ma.count(k)) rec.metadata[k] = v;
  }
}

}  // namespace

MatchRecord play_match(Player& a, Player& b, const PayoffMatrix& m, const Horizon& h,
                       std::uint64_t seed) {
  MatchRecord rec;
  rec.player_a_id = a.id();
  rec.player_b_id = b.id();
  rec.payoffs = m;
  rec.horizon = h;
  rec.seed = seed;

  GameRng horizon_rng(seed, "horizon");
  GameRng rng_a(seed, "player_a");
  GameRng rng_b(seed, "player_b");

  MatchInfo info{m, h.disclosed_rounds()};
  History hist_a;
  History hist_b;

  try {
    a.begin_match(info);
    b.begin_match(info);
    int completed = 0;
    while (should_continue(h, completed, horizon_rng)) {
      // Both moves are collected before either is revealed.
      Action act_a = a.choose(hist_a, info, rng_a);
      Action act_b = b.choose(hist_b, info, rng_b);
      auto [pa, pb] = payoff(m, act_a, act_b);
      rec.rounds.push_back(RoundOutcome{completed + 1, act_a, act_b, pa, pb});
      rec.total_a += pa;
      rec.total_b += pb;
      hist_a.push_back({act_a, act_b});
      hist_b.push_back({act_b, act_a});
      ++completed;
    }
    if (const auto* ind = h.as_indefinite(); ind && completed >= ind->max_rounds) {
      rec.metadata["cap_hit"] = "true";
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AgentFailure) throw;
    rec.metadata["status"] = "agent_failure";
    rec.metadata["failure"] = e.what();
  }
  merge_metadata(rec, a, b);
  return rec;
}

std::vector<CumulativePoint> cumulative_series(const MatchRecord& r) {
  if (r.rounds.empty()) fail(ErrorCode::InsufficientData, "cumulative_series needs a non-empty record");
  std::vector<CumulativePoint> out;
  out.reserve(r.rounds.size());
  Score ca = 0, cb = 0;
  for (const auto& ro : r.rounds) {
    ca += ro.payoff_a;
    cb += ro.payoff_b;
    out.push_back({ro.round_index, ca, cb, ca - cb});
  }
  return out;
}

History history_for(const MatchRecord& r, bool as_player_a) {
  History h;
  h.reserve(r.rounds.size());
  for (const auto& ro : r.rounds) {
    if (as_player_a) {
      h.push_back({ro.action_a, ro.action_b});
    } else {
      h.push_back({ro.action_b, ro.action_a});
    }
  }
  return h;
}

}  // namespace ipd

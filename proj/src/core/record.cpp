// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "ipd/error.hpp"
#include "ipd/game.hpp"
#include "ipd/json_util.hpp"

namespace ipd {

Json score_to_json(Score s) {
  if (std::isfinite(s) && s == std::floor(s) && std::fabs(s) < 9.0e15) {
    return static_cast<std::int64_t>(s);
  }
  return s;
}

void to_json(Json& j, const PayoffMatrix& m) {
  j = Json{{"H", score_to_json(m.H())},
           {"R", score_to_json(m.R())},
           {"P", score_to_json(m.P())},
           {"L", score_to_json(m.L())}};
}

PayoffMatrix payoffs_from_json(const Json& j) {
  json_util::expect_keys(j, "payoffs", {"H", "R", "P", "L"}, {});
  return PayoffMatrix::validate(json_util::number(j, "H"), json_util::number(j, "R"),
                                json_util::number(j, "P"), json_util::number(j, "L"));
}

void to_json(Json& j, const Horizon& h) {
  if (const auto* f = h.as_fixed()) {
    j = Json{{"kind", "fixed"}, {"rounds", f->rounds}, {"known_to_players", f->known_to_players}};
  } else {
    const auto* ind = h.as_indefinite();
    j = Json{{"kind", "indefinite"},
             {"stop_probability", ind->stop_probability},
             {"max_rounds", ind->max_rounds}};
  }
}

Horizon horizon_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail(ErrorCode::ConfigError, "horizon must be an object with a string \"kind\"");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "fixed") {
    json_util::expect_keys(j, "horizon", {"kind", "rounds"}, {"known_to_players"});
    bool known = j.contains("known_to_players") ? json_util::boolean(j, "known_to_players") : true;
    return Horizon::fixed(json_util::integer(j, "rounds"), known);
  }
  if (kind == "indefinite") {
    json_util::expect_keys(j, "horizon", {"kind", "stop_probability"}, {"max_rounds"});
    int cap = j.contains("max_rounds") ? json_util::integer(j, "max_rounds") : 10000;
    return Horizon::indefinite(json_util::number(j, "stop_probability"), cap);
  }
  fail(ErrorCode::ConfigError, "unknown horizon kind \"" + kind + "\"");
}

void to_json(Json& j, const MatchRecord& r) {
  Json rounds = Json::array();
  for (const auto& ro : r.rounds) {
    rounds.push_back(Json{{"round_index", ro.round_index},
                          {"action_a", std::string(1, to_char(ro.action_a))},
                          {"action_b", std::string(1, to_char(ro.action_b))},
                          {"payoff_a", score_to_json(ro.payoff_a)},
                          {"payoff_b", score_to_json(ro.payoff_b)}});
  }
  j = Json{{"v", kRecordSchemaVersion},
           {"player_a_id", r.player_a_id},
           {"player_b_id", r.player_b_id},
           {"payoffs", r.payoffs},
           {"horizon", r.horizon},
           {"seed", r.seed},
           {"rounds", std::move(rounds)},
           {"total_a", score_to_json(r.total_a)},
           {"total_b", score_to_json(r.total_b)},
           {"metadata", r.metadata}};
}

MatchRecord record_from_json(const Json& j, int reader_version) {
  if (!j.is_object()) fail(ErrorCode::IoError, "record is not a JSON object");
  if (!j.contains("v") || !j["v"].is_number_integer()) {
    fail(ErrorCode::IoError, "record has no integer schema version \"v\"");
  }
  const int v = j["v"].get<int>();
  if (v != reader_version) {
    fail(ErrorCode::SchemaVersionMismatch, "record schema v" + std::to_string(v) +
                                               " cannot be read by v" +
                                               std::to_string(reader_version) + " reader");
  }
  json_util::expect_keys(j, "record",
                         {"v", "player_a_id", "player_b_id", "payoffs", "horizon", "seed",
                          "rounds", "total_a", "total_b", "metadata"},
                         {});
  MatchRecord r;
  r.player_a_id = json_util::string(j, "player_a_id");
  r.player_b_id = json_util::string(j, "player_b_id");
  r.payoffs = payoffs_from_json(j["payoffs"]);
  r.horizon = horizon_from_json(j["horizon"]);
  if (!j["seed"].is_number_unsigned()) fail(ErrorCode::IoError, "record seed must be unsigned");
  r.seed = j["seed"].get<std::uint64_t>();
  const auto& rounds = j["rounds"];
  if (!rounds.is_array()) fail(ErrorCode::IoError, "record rounds must be an array");
  for (const auto& ro : rounds) {
    json_util::expect_keys(ro, "round",
                           {"round_index", "action_a", "action_b", "payoff_a", "payoff_b"}, {});
    RoundOutcome o;
    o.round_index = json_util::integer(ro, "round_index");
    o.action_a = action_from_string(json_util::string(ro, "action_a"));
    o.action_b = action_from_string(json_util::string(ro, "action_b"));
    o.payoff_a = json_util::number(ro, "payoff_a");
    o.payoff_b = json_util::number(ro, "payoff_b");
    r.rounds.push_back(o);
  }
  r.total_a = json_util::number(j, "total_a");
  r.total_b = json_util::number(j, "total_b");
  if (!j["metadata"].is_object()) fail(ErrorCode::IoError, "record metadata must be an object");
  for (const auto& [k, val] : j["metadata"].items()) {
    if (!val.is_string()) fail(ErrorCode::IoError, "metadata values must be strings");
    r.metadata[k] = val.get<std::string>();
  }
  return r;
}

std::string record_to_line(const MatchRecord& r) { return Json(r).dump(); }

}  // namespace ipd

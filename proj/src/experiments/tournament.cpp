// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>

#include "experiments_internal.hpp"
#include "ipd/agent.hpp"
#include "ipd/error.hpp"
#include "ipd/json_util.hpp"

namespace ipd::experiments {

TournamentConfig tournament_config_from_json(const Json& j) {
  json_util::expect_keys(j, "tournament config", {"players"},
                         {"payoffs", "horizon", "seeds_per_pairing", "include_self_play", "base_seed",
                          "window", "parallelism", "max_in_flight"});
  TournamentConfig c;
  if (!j["players"].is_array()) fail(ErrorCode::ConfigError, "\"players\" must be an array");
  for (const auto& p : j["players"]) c.players.push_back(spec_from_json(p));
  if (j.contains("payoffs")) c.matrix = payoffs_from_json(j["payoffs"]);
  if (j.contains("horizon")) c.horizon = horizon_from_json(j["horizon"]);
  if (j.contains("seeds_per_pairing")) c.seeds_per_pairing = json_util::integer(j, "seeds_per_pairing");
  if (j.contains("include_self_play")) c.include_self_play = json_util::boolean(j, "include_self_play");
  if (j.contains("base_seed")) c.base_seed = json_util::unsigned64(j, "base_seed");
  if (j.contains("window")) c.window = json_util::integer(j, "window");
  if (j.contains("parallelism")) c.parallelism = json_util::integer(j, "parallelism");
  if (j.contains("max_in_flight")) c.max_in_flight = json_util::integer(j, "max_in_flight");
  return c;
}

Json to_json(const TournamentConfig& c) {
  return Json{{"players", c.players},
              {"payoffs", c.matrix},
              {"horizon", c.horizon},
              {"seeds_per_pairing", c.seeds_per_pairing},
              {"include_self_play", c.include_self_play},
              {"base_seed", c.base_seed},
              {"window", c.window}};
}

std::vector<std::string> player_ids(const std::vector<StrategySpec>& specs) {
  std::vector<std::string> ids;
  std::map<std::string, int> seen;
  for (const auto& s : specs) {
    auto label = s.label();
    const int n = ++seen[label];
    ids.push_back(n == 1 ? label : label + "#" + std::to_string(n));
  }
  return ids;
}

std::uint64_t match_seed(std::uint64_t base_seed, const std::string& a, const std::string& b,
                         int seed_index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ fnv1a64(a));
  h = splitmix64(h ^ fnv1a64(b));
  return splitmix64(h ^ static_cast<std::uint64_t>(seed_index));
}

std::vector<RankingRow> compute_ranking(std::span<const MatchRecord> records,
                                        const std::vector<std::string>& players) {
  std::map<std::string, RankingRow> rows;
  for (const auto& p : players) rows[p].player = p;
  const auto add = [&](const std::string& id, Score own, Score opp, std::size_t rounds) {
    auto it = rows.find(id);
    if (it == rows.end()) return;
    auto& row = it->second;
    row.total_score += own;
    row.rounds += static_cast<std::int64_t>(rounds);
    ++row.matches;
    if (own > opp) {
      ++row.wins;
    } else if (own == opp) {
      ++row.ties;
    } else {
      ++row.losses;
    }
  };
  for (const auto& r : records) {
    if (r.failed()) continue;
    add(r.player_a_id, r.total_a, r.total_b, r.rounds.size());
    add(r.player_b_id, r.total_b, r.total_a, r.rounds.size());
  }
  std::vector<RankingRow> out;
  for (auto& [_, row] : rows) {
    row.mean_score_per_round = row.rounds > 0 ? row.total_score / static_cast<double>(row.rounds) : 0.0;
    out.push_back(row);
  }
  std::sort(out.begin(), out.end(), [](const RankingRow& x, const RankingRow& y) {
    if (x.mean_score_per_round != y.mean_score_per_round) {
      return x.mean_score_per_round > y.mean_score_per_round;
    }
    if (x.wins != y.wins) return x.wins > y.wins;
    return x.player < y.player;
  });
  return out;
}

Json to_json(const RankingRow& r) {
  return Json{{"player", r.player},
              {"mean_score_per_round", r.mean_score_per_round},
              {"total_score", score_to_json(r.total_score)},
              {"rounds", r.rounds},
              {"matches", r.matches},
              {"wins", r.wins},
              {"ties", r.ties},
              {"losses", r.losses}};
}

TournamentResult run_round_robin(const TournamentConfig& cfg) {
  if (cfg.players.size() < 2) fail(ErrorCode::ConfigError, "a tournament needs at least two players");
  if (cfg.seeds_per_pairing < 1) fail(ErrorCode::ConfigError, "seeds_per_pairing must be >= 1");
  if (cfg.parallelism < 1) fail(ErrorCode::ConfigError, "parallelism must be >= 1");
  if (cfg.max_in_flight < 1) fail(ErrorCode::ConfigError, "max_in_flight must be >= 1");
  if (cfg.window < 1) fail(ErrorCode::ConfigError, "window must be >= 1");

  TournamentResult res;
  res.config = cfg;
  res.players = player_ids(cfg.players);
  for (std::size_t i = 0; i < cfg.players.size(); ++i) {
    detail::check_spec(cfg.players[i], "player " + res.players[i]);
  }
  set_max_in_flight_requests(cfg.max_in_flight);
  detail::preflight_agents(cfg.players);

  struct Job {
    std::size_t a;
    std::size_t b;
    int seed_index;
  };
  std::vector<Job> jobs;
  const std::size_t m = cfg.players.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = cfg.include_self_play ? i : i + 1; j < m; ++j) {
      for (int s = 0; s < cfg.seeds_per_pairing; ++s) jobs.push_back({i, j, s});
    }
  }

  res.records.resize(jobs.size());
  std::vector<std::vector<Json>> ta(jobs.size());
  std::vector<std::vector<Json>> tb(jobs.size());
  detail::run_parallel(jobs.size(), cfg.parallelism, [&](std::size_t k) {
    const auto& job = jobs[k];
    const auto& a_id = res.players[job.a];
    const auto& b_id = res.players[job.b];
    res.records[k] = detail::play(cfg.players[job.a], a_id, cfg.players[job.b], b_id, cfg.matrix,
                                  cfg.horizon, match_seed(cfg.base_seed, a_id, b_id, job.seed_index),
                                  &ta[k], &tb[k]);
  });

  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto stem = detail::file_stem(res.players[jobs[k].a] + "_vs_" + res.players[jobs[k].b] +
                                        "_seed" + std::to_string(jobs[k].seed_index));
    if (!ta[k].empty()) res.transcripts.push_back({stem + "_a", std::move(ta[k])});
    if (!tb[k].empty()) res.transcripts.push_back({stem + "_b", std::move(tb[k])});
  }

  res.ranking = compute_ranking(res.records, res.players);
  res.metrics = metrics::compute_metrics(res.records, res.players);
  return res;
}

}  // namespace ipd::experiments

// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <set>

#include "experiments_internal.hpp"
#include "ipd/agent.hpp"
#include "ipd/error.hpp"
#include "ipd/json_util.hpp"

namespace ipd::experiments {

namespace {

SwitchCondition condition_from_json(const Json& j, int default_k) {
  json_util::expect_keys(j, "switch condition", {"label", "pre", "post"}, {"switch_round"});
  SwitchCondition c;
  c.label = json_util::string(j, "label");
  c.pre = spec_from_json(j["pre"]);
  c.post = spec_from_json(j["post"]);
  c.switch_round = j.contains("switch_round") ? json_util::integer(j, "switch_round") : default_k;
  return c;
}

Json to_json(const SwitchCondition& c) {
  return Json{{"label", c.label}, {"pre", c.pre}, {"post", c.post}, {"switch_round", c.switch_round}};
}

// Names of every strategy a spec needs, including switch sub-specs.
void collect_names(const StrategySpec& s, std::vector<std::string>& out) {
  out.push_back(s.name);
  if (s.name == "switch" && s.params.is_object()) {
    for (const char* key : {"a", "b"}) {
      if (s.params.contains(key)) {
        try {
          collect_names(spec_from_json(s.params[key]), out);
        } catch (const Error&) {
        }
      }
    }
  }
}

std::optional<std::string> missing_strategy(const SwitchCondition& c) {
  std::vector<std::string> names;
  collect_names(c.pre, names);
  collect_names(c.post, names);
  for (const auto& n : names) {
    if (!default_catalog().contains(n)) return n;
  }
  return std::nullopt;
}

}  // namespace

std::vector<SwitchCondition> canonical_conditions(int k) {
  const StrategySpec coop{"always_cooperate", Json::object()};
  const StrategySpec defect{"always_defect", Json::object()};
  const StrategySpec competitive{"tit_for_tat", Json::object()};
  return {{"Coop->Defect", coop, defect, k},
          {"Defect->Coop", defect, coop, k},
          {"Coop->Competitive", coop, competitive, k},
          {"Defect->Competitive", defect, competitive, k}};
}

SwitchExperimentConfig switch_config_from_json(const Json& j) {
  json_util::expect_keys(j, "switch config", {"subject"},
                         {"conditions", "switch_round", "rounds", "known_to_players", "seeds", "window",
                          "epsilon", "base_seed", "payoffs", "parallelism", "max_in_flight"});
  SwitchExperimentConfig c;
  c.subject = spec_from_json(j["subject"]);
  if (j.contains("rounds")) c.rounds = json_util::integer(j, "rounds");
  const int k = j.contains("switch_round") ? json_util::integer(j, "switch_round") : c.rounds / 2 + 1;
  if (j.contains("conditions")) {
    if (!j["conditions"].is_array()) fail(ErrorCode::ConfigError, "\"conditions\" must be an array");
    for (const auto& cj : j["conditions"]) c.conditions.push_back(condition_from_json(cj, k));
  } else {
    c.conditions = canonical_conditions(k);
  }
  if (j.contains("known_to_players")) c.known_to_players = json_util::boolean(j, "known_to_players");
  if (j.contains("seeds")) c.seeds = json_util::integer(j, "seeds");
  if (j.contains("window")) c.window = json_util::integer(j, "window");
  if (j.contains("epsilon")) c.epsilon = json_util::number(j, "epsilon");
  if (j.contains("base_seed")) c.base_seed = json_util::unsigned64(j, "base_seed");
  if (j.contains("payoffs")) c.matrix = payoffs_from_json(j["payoffs"]);
  if (j.contains("parallelism")) c.parallelism = json_util::integer(j, "parallelism");
  if (j.contains("max_in_flight")) c.max_in_flight = json_util::integer(j, "max_in_flight");
  return c;
}

Json to_json(const SwitchExperimentConfig& c) {
  Json conditions = Json::array();
  for (const auto& cond : c.conditions) conditions.push_back(to_json(cond));
  return Json{{"subject", c.subject},
              {"conditions", std::move(conditions)},
              {"rounds", c.rounds},
              {"known_to_players", c.known_to_players},
              {"seeds", c.seeds},
              {"window", c.window},
              {"epsilon", c.epsilon},
              {"base_seed", c.base_seed},
              {"payoffs", c.matrix}};
}

std::vector<MatchRecord> SwitchExperimentResult::all_records() const {
  std::vector<MatchRecord> out;
  for (const auto& c : conditions) out.insert(out.end(), c.records.begin(), c.records.end());
  return out;
}

SwitchExperimentResult run_switch_battery(const SwitchExperimentConfig& cfg) {
  if (cfg.rounds < 2) fail(ErrorCode::ConfigError, "rounds must be >= 2");
  if (cfg.seeds < 1) fail(ErrorCode::ConfigError, "seeds must be >= 1");
  if (cfg.window < 1) fail(ErrorCode::ConfigError, "window must be >= 1");
  if (!(cfg.epsilon > 0 && cfg.epsilon < 1)) fail(ErrorCode::ConfigError, "epsilon must lie in (0, 1)");
  if (cfg.parallelism < 1) fail(ErrorCode::ConfigError, "parallelism must be >= 1");
  if (cfg.max_in_flight < 1) fail(ErrorCode::ConfigError, "max_in_flight must be >= 1");
  if (cfg.conditions.empty()) fail(ErrorCode::ConfigError, "no switch conditions");

  SwitchExperimentResult res;
  res.config = cfg;
  res.subject_id = cfg.subject.label();
  detail::check_spec(cfg.subject, "subject");

  std::set<std::string> labels;
  for (const auto& c : cfg.conditions) {
    if (c.label.empty()) fail(ErrorCode::ConfigError, "condition labels must be non-empty");
    if (!labels.insert(c.label).second) fail(ErrorCode::ConfigError, "duplicate condition label " + c.label);
    if (!(c.switch_round > cfg.window && c.switch_round < cfg.rounds - cfg.window)) {
      fail(ErrorCode::ConfigError, "condition " + c.label + ": switch_round " +
                                       std::to_string(c.switch_round) + " must lie in (" +
                                       std::to_string(cfg.window) + ", " +
                                       std::to_string(cfg.rounds - cfg.window) + ")");
    }
    if (auto missing = missing_strategy(c)) {
      res.warnings.push_back("condition " + c.label + " skipped: strategy \"" + *missing +
                             "\" is not installed");
      continue;
    }
    ConditionResult cr;
    cr.condition = c;
    auto spec = compose_switch(c.pre, c.post, c.switch_round);
    detail::check_spec(spec, "condition " + c.label);
    cr.opponent_id = spec.label();
    res.conditions.push_back(std::move(cr));
  }

  set_max_in_flight_requests(cfg.max_in_flight);
  detail::preflight_agents({cfg.subject});

  const auto horizon = Horizon::fixed(cfg.rounds, cfg.known_to_players);
  const std::size_t per = static_cast<std::size_t>(cfg.seeds);
  const std::size_t total = res.conditions.size() * per;
  std::vector<MatchRecord> records(total);
  std::vector<std::vector<Json>> transcripts(total);
  detail::run_parallel(total, cfg.parallelism, [&](std::size_t k) {
    const auto& cr = res.conditions[k / per];
    const int s = static_cast<int>(k % per);
    const auto& c = cr.condition;
    auto rec = detail::play(cfg.subject, res.subject_id, compose_switch(c.pre, c.post, c.switch_round),
                            cr.opponent_id, cfg.matrix, horizon,
                            match_seed(cfg.base_seed, res.subject_id, c.label, s), &transcripts[k],
                            nullptr);
    rec.metadata["condition"] = c.label;
    records[k] = std::move(rec);
  });

  for (std::size_t ci = 0; ci < res.conditions.size(); ++ci) {
    auto& cr = res.conditions[ci];
    for (std::size_t s = 0; s < per; ++s) {
      const std::size_t k = ci * per + s;
      if (!transcripts[k].empty()) {
        res.transcripts.push_back({detail::file_stem(cr.condition.label + "_seed" + std::to_string(s)),
                                   std::move(transcripts[k])});
      }
      cr.records.push_back(std::move(records[k]));
    }
    try {
      cr.report = metrics::adaptation_report(cr.records, res.subject_id, cfg.window, cfg.epsilon);
    } catch (const Error& e) {
      cr.report_error = e.what();
    }
  }

  const auto all = res.all_records();
  if (!all.empty()) res.metrics = metrics::compute_metrics(all);
  return res;
}

}  // namespace ipd::experiments

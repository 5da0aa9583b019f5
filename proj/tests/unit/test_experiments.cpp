// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "doctest.h"
#include "ipd/error.hpp"
#include "ipd/experiments.hpp"
#include "support.hpp"

using namespace ipd;
using namespace ipd::experiments;
using test::spec;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ipd::Error");
  return ErrorCode::IoError;
}

TournamentConfig three(int seeds = 20) {
  TournamentConfig c;
  c.players = {spec("always_cooperate"), spec("always_defect"), spec("tit_for_tat")};
  c.seeds_per_pairing = seeds;
  return c;
}

const RankingRow& row(const TournamentResult& r, const std::string& id) {
  for (const auto& x : r.ranking) {
    if (x.player == id) return x;
  }
  throw std::runtime_error("no row " + id);
}

SwitchExperimentConfig battery(const std::string& subject, int seeds = 3) {
  SwitchExperimentConfig c;
  c.subject = spec(subject);
  c.conditions = canonical_conditions(26);
  c.seeds = seeds;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("round robin counts") {
  auto r = run_round_robin(three(20));
  CHECK(r.records.size() == 60);
  auto cfg = three(4);
  cfg.include_self_play = true;
  CHECK(run_round_robin(cfg).records.size() == 24);
  std::set<std::uint64_t> seeds;
  for (const auto& rec : r.records) seeds.insert(rec.seed);
  CHECK(seeds.size() == 60);
}

TEST_CASE("ranking totals") {
  auto r = run_round_robin(three(1));
  CHECK(row(r, "always_defect").total_score == 304);
  CHECK(row(r, "tit_for_tat").total_score == 199);
  CHECK(row(r, "always_cooperate").total_score == 150);
  CHECK(r.ranking[0].player == "always_defect");
  CHECK(r.ranking[2].player == "always_cooperate");
  CHECK(row(r, "always_defect").wins == 2);
  CHECK(row(r, "always_defect").mean_score_per_round == doctest::Approx(304.0 / 100.0));
  CHECK(row(r, "always_cooperate").ties == 1);
}

TEST_CASE("self-play counts both sides") {
  TournamentConfig c;
  c.players = {spec("always_cooperate"), spec("always_defect")};
  c.seeds_per_pairing = 1;
  c.include_self_play = true;
  auto r = run_round_robin(c);
  CHECK(row(r, "always_cooperate").matches == 3);
  CHECK(row(r, "always_cooperate").total_score == 300);
  CHECK(row(r, "always_cooperate").ties == 2);
}

TEST_CASE("duplicate labels get suffixes") {
  CHECK(player_ids({spec("grim"), spec("grim"), spec("tit_for_tat")}) ==
        std::vector<std::string>{"grim", "grim#2", "tit_for_tat"});
}

TEST_CASE("match seeds depend on every input") {
  const auto s = match_seed(1, "a", "b", 0);
  CHECK(s == match_seed(1, "a", "b", 0));
  CHECK(s != match_seed(2, "a", "b", 0));
  CHECK(s != match_seed(1, "b", "a", 0));
  CHECK(s != match_seed(1, "a", "b", 1));
}

TEST_CASE("parallelism does not change results") {
  auto cfg = three(5);
  cfg.players.push_back(spec("random"));
  cfg.horizon = Horizon::indefinite(0.05);
  auto serial = run_round_robin(cfg);
  cfg.parallelism = 4;
  auto parallel = run_round_robin(cfg);
  CHECK(serial.records == parallel.records);
  CHECK(summary_json(serial).dump() == summary_json(parallel).dump());
}

TEST_CASE("config parsing") {
  auto j = Json::parse(R"({"players": ["tit_for_tat", {"name": "random", "params": {"p_coop": 0.2}}],
                           "horizon": {"kind": "indefinite", "stop_probability": 0.1},
                           "seeds_per_pairing": 3, "base_seed": 7})");
  auto c = tournament_config_from_json(j);
  CHECK(c.players.size() == 2);
  CHECK(c.seeds_per_pairing == 3);
  CHECK(tournament_config_from_json(to_json(c)).players == c.players);
  j["bogus"] = 1;
  CHECK(code_of([&] { tournament_config_from_json(j); }) == ErrorCode::ConfigError);
  auto bad = Json::parse(R"({"players": ["grim", "nope"]})");
  CHECK(code_of([&] { run_round_robin(tournament_config_from_json(bad)); }) == ErrorCode::ConfigError);
  auto order = Json::parse(R"({"players": ["grim", "grim"], "payoffs": {"H": 3, "R": 5, "P": 1, "L": 0}})");
  CHECK(code_of([&] { tournament_config_from_json(order); }) == ErrorCode::OrderingViolation);
  auto one = three(1);
  one.players.resize(1);
  CHECK(code_of([&] { run_round_robin(one); }) == ErrorCode::ConfigError);
}

TEST_CASE("persistence round trip") {
  test::TempDir dir;
  auto cfg = three(3);
  cfg.players.push_back(spec("random"));
  auto r = run_round_robin(cfg);
  persist(r, dir.path());
  CHECK(result_kind(dir.path()) == "tournament");
  auto back = load_tournament(dir.path());
  CHECK(equivalent(r, back));
  CHECK(summary_json(back).dump() == summary_json(r).dump());
  CHECK(test::slurp(dir / "summary.json") == summary_json(r).dump(2) + "\n");
}

TEST_CASE("truncated records are rejected with a line number") {
  test::TempDir dir;
  auto r = run_round_robin(three(2));
  persist(r, dir.path());
  auto text = test::slurp(dir / "records.jsonl");
  auto cut = text.substr(0, text.size() / 2);
  test::spit(dir / "records.jsonl", cut);
  try {
    load_tournament(dir.path());
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  test::spit(dir / "records.jsonl", text.substr(0, text.find('\n') + 1));
  CHECK(code_of([&] { load_tournament(dir.path()); }) == ErrorCode::IoError);
}

TEST_CASE("schema versions") {
  test::TempDir dir;
  persist(run_round_robin(three(1)), dir.path());
  CHECK(code_of([&] { load_tournament(dir.path(), 2); }) == ErrorCode::SchemaVersionMismatch);
  CHECK(code_of([&] { read_records(dir / "records.jsonl", 2); }) == ErrorCode::SchemaVersionMismatch);
  CHECK(code_of([&] { load_switch(dir.path()); }) == ErrorCode::IoError);
  test::TempDir empty;
  CHECK(code_of([&] { result_kind(empty.path()); }) == ErrorCode::IoError);
}

TEST_CASE("switch battery") {
  auto res = run_switch_battery(battery("tit_for_tat"));
  REQUIRE(res.conditions.size() == 4);
  for (const auto& c : res.conditions) {
    CHECK(c.records.size() == 3);
    REQUIRE(c.report);
    for (const auto& r : c.records) {
      CHECK(r.metadata.at("condition") == c.condition.label);
      CHECK(r.metadata.at("switch_round") == "26");
      CHECK(r.player_a_id == "tit_for_tat");
    }
  }
  CHECK(res.conditions[0].condition.label == "Coop->Defect");
  // Defect->Coop: tit for tat answers round 25 with one D, then cooperates.
  CHECK(res.conditions[1].report->post_rate == doctest::Approx(24.0 / 25.0));
}

TEST_CASE("switch battery validation and skipping") {
  auto cfg = battery("always_defect");
  cfg.conditions[1].label = cfg.conditions[0].label;
  CHECK(code_of([&] { run_switch_battery(cfg); }) == ErrorCode::ConfigError);
  cfg = battery("always_defect");
  cfg.conditions[0].switch_round = 48;
  CHECK(code_of([&] { run_switch_battery(cfg); }) == ErrorCode::ConfigError);
  cfg = battery("always_defect");
  cfg.conditions.push_back({"Missing", spec("always_cooperate"), spec("not_installed"), 26});
  auto res = run_switch_battery(cfg);
  CHECK(res.conditions.size() == 4);
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("not_installed") != std::string::npos);
}

TEST_CASE("switch config json") {
  auto c = switch_config_from_json(Json::parse(R"({"subject": "grim", "rounds": 40, "seeds": 2})"));
  REQUIRE(c.conditions.size() == 4);
  CHECK(c.conditions[0].switch_round == 21);
  auto custom = switch_config_from_json(Json::parse(
      R"({"subject": "grim", "conditions": [{"label": "x", "pre": "always_defect", "post": "grim"}]})"));
  CHECK(custom.conditions[0].switch_round == 26);
  CHECK(switch_config_from_json(to_json(custom)).conditions[0].label == "x");
}

TEST_CASE("switch persistence") {
  test::TempDir dir;
  auto res = run_switch_battery(battery("win_stay_lose_shift", 2));
  persist(res, dir.path());
  CHECK(result_kind(dir.path()) == "switch");
  auto back = load_switch(dir.path());
  CHECK(equivalent(res, back));
  CHECK(summary_json(back).dump() == summary_json(res).dump());
}

TEST_CASE("plot data") {
  auto r = run_round_robin(three(2));
  auto win = plot_csv(r, PlotKind::WinSeries);
  CHECK(win.rfind("opponent,round,cum_wins,cum_diff\n", 0) == 0);
  CHECK(win.find("always_defect,50,0,-250") != std::string::npos);
  CHECK(plot_csv(r, PlotKind::Rankings).find("1,always_defect,") != std::string::npos);
  CHECK(plot_csv(r, PlotKind::CoopSeries).rfind("player,opponent,round,coop_rate\n", 0) == 0);
  CHECK(code_of([&] { plot_csv(r, PlotKind::Recovery); }) == ErrorCode::MissingSeries);
  CHECK(code_of([&] { plot_csv(r, PlotKind::WinSeries, std::string("nobody")); }) == ErrorCode::UnknownPlayer);
  CHECK(code_of([] { plot_kind_from_string("pie"); }) == ErrorCode::ConfigError);
  CHECK(plot_kind_from_string("overlay") == PlotKind::Overlay);

  auto s = run_switch_battery(battery("tit_for_tat", 2));
  auto rec = plot_csv(s, PlotKind::Recovery);
  CHECK(rec.rfind("condition,offset,coop_rate,recovery_rate\n", 0) == 0);
  CHECK(rec.find("Coop->Defect,-5,1,1\n") != std::string::npos);
  auto ov = plot_csv(s, PlotKind::Overlay);
  CHECK(ov.find("coop_rate_change_pct") != std::string::npos);
  CHECK(ov.find("payoff_change") != std::string::npos);
  CHECK(code_of([&] { plot_csv(s, PlotKind::Rankings); }) == ErrorCode::MissingSeries);

  auto ind = three(1);
  ind.horizon = Horizon::indefinite(0.2);
  auto ri = run_round_robin(ind);
  auto kinds = available_plots(ri);
  CHECK(std::find(kinds.begin(), kinds.end(), PlotKind::WinSeries) == kinds.end());
}

TEST_CASE("agent failures are kept as flagged records") {
  TournamentConfig c;
  c.players = {spec("tit_for_tat"), test::subprocess_agent_spec()};
  c.seeds_per_pairing = 2;
  auto ok = run_round_robin(c);
  for (const auto& r : ok.records) CHECK_FALSE(r.failed());
  CHECK(ok.transcripts.size() == 2);

  c.players = {spec("tit_for_tat"), test::subprocess_agent_spec("--exit", 300)};
  CHECK(code_of([&] { run_round_robin(c); }) == ErrorCode::AgentFailure);
}

}  // TEST_SUITE

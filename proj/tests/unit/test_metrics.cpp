// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "ipd/error.hpp"
#include "ipd/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ipd;
using namespace ipd::metrics;
using oracle::scripted;
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

std::vector<MatchRecord> pool(const std::vector<StrategySpec>& specs, int seeds, bool self_play, int rounds = 50) {
  std::vector<MatchRecord> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = self_play ? i : i + 1; j < specs.size(); ++j) {
      for (int s = 0; s < seeds; ++s) {
        out.push_back(test::play(specs[i], specs[j], Horizon::fixed(rounds), static_cast<std::uint64_t>(s * 31 + i * 7 + j)));
      }
    }
  }
  return out;
}

MatchRecord with_switch(MatchRecord r, int k) {
  r.metadata["switch_round"] = std::to_string(k);
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("tit for tat against always defect") {
  std::vector<MatchRecord> recs{test::play(spec("tit_for_tat"), spec("always_defect"), Horizon::fixed(50), 0)};
  auto e = extract_events(recs, "tit_for_tat");
  CHECK(e.opponent_defections == 50);
  CHECK(e.retaliations == 49);
  CHECK(e.forgiven_defections == 0);
  CHECK(e.first_moves_cooperative == 1);
  auto d = extract_events(recs, "always_defect");
  CHECK(d.first_moves_cooperative == 0);
  CHECK(d.uncalled_defections == 2);  // round 1, and round 2 after TFT's opening C
  auto p = behavior_profile(e);
  CHECK(p.retaliation.value() == 1.0);
  CHECK(p.forgiveness.value() == 0.0);
}

TEST_CASE("undefined ratios stay undefined") {
  std::vector<MatchRecord> recs{scripted("CCC", "CCC")};
  auto p = behavior_profile(extract_events(recs, "a"));
  CHECK_FALSE(p.forgiveness.value());
  CHECK_FALSE(p.retaliation.value());
  CHECK_FALSE(p.generosity.value());
  CHECK(p.niceness.value() == 1.0);
  CHECK(to_json(p.forgiveness)["value"].is_null());
}

TEST_CASE("final round defection is not answerable") {
  std::vector<MatchRecord> recs{scripted("CCC", "CCD")};
  auto e = extract_events(recs, "a");
  CHECK(e.opponent_defections == 1);
  CHECK(e.answerable_defections == 0);
  CHECK(e.forgiven_defections + e.retaliations == 0);
}

TEST_CASE("events agree with the reference scanner on random records") {
  GameRng rng(9, "records");
  for (int i = 0; i < 300; ++i) {
    std::vector<MatchRecord> recs;
    const int games = 1 + static_cast<int>(rng.next() % 4);
    for (int g = 0; g < games; ++g) {
      const int n = 1 + static_cast<int>(rng.next() % 12);
      std::string a, b;
      for (int t = 0; t < n; ++t) {
        a += rng.uniform() < 0.5 ? 'C' : 'D';
        b += rng.uniform() < 0.5 ? 'C' : 'D';
      }
      recs.push_back(rng.uniform() < 0.2 ? scripted(a, b, "p", "p") : scripted(a, b, "p", "q"));
    }
    CHECK(oracle::same(oracle::events(recs, "p"), extract_events(recs, "p")));
  }
}

TEST_CASE("failed records are ignored") {
  auto good = scripted("CD", "DD");
  auto bad = scripted("DD", "CC");
  bad.metadata["status"] = "agent_failure";
  std::vector<MatchRecord> recs{good, bad};
  CHECK(extract_events(recs, "a") == extract_events(std::vector<MatchRecord>{good}, "a"));
  CHECK(code_of([&] { extract_events(recs, "zzz"); }) == ErrorCode::UnknownPlayer);
}

TEST_CASE("good partner") {
  auto allc = spec("always_cooperate");
  auto alld = spec("always_defect");
  std::vector<MatchRecord> one{test::play(alld, allc, Horizon::fixed(50), 0)};
  CHECK(good_partner(one, "always_defect") == 0.0);
  CHECK(good_partner(one, "always_cooperate") == 1.0);
  std::vector<MatchRecord> tie{test::play(alld, alld, Horizon::fixed(50), 0)};
  CHECK(good_partner(tie, "always_defect") == 1.0);
}

TEST_CASE("cooperation matrix") {
  auto recs = pool({spec("always_cooperate"), spec("always_defect")}, 1, false);
  auto cm = cooperation_matrix(recs);
  CHECK(cm.players == std::vector<std::string>{"always_cooperate", "always_defect"});
  CHECK(cm.entries[0][1] == 1.0);
  CHECK(cm.entries[1][0] == 0.0);
  CHECK_FALSE(cm.entries[0][0]);

  auto tft = pool({spec("tit_for_tat"), spec("always_defect")}, 1, false);
  CHECK(*cooperation_matrix(tft).entries[0][1] == doctest::Approx(0.02));

  auto three = pool({spec("always_cooperate"), spec("always_defect"), spec("tit_for_tat")}, 2, false);
  auto fwd = cooperation_matrix(three);
  auto rev = cooperation_matrix(three, std::vector<std::string>{"tit_for_tat", "always_defect", "always_cooperate"});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(fwd.entries[i][j] == rev.entries[2 - i][2 - j]);
  }
  CHECK(code_of([] { cooperation_matrix(std::vector<MatchRecord>{}); }) == ErrorCode::InsufficientData);
}

TEST_CASE("power iteration basics") {
  Matrix id(3);
  for (std::size_t i = 0; i < 3; ++i) id(i, i) = 1;
  auto r = power_iteration(id, 1e-12, 100);
  CHECK(r.eigenvalue == doctest::Approx(1.0));
  for (double x : r.vector) CHECK(x == doctest::Approx(1 / std::sqrt(3.0)));

  Matrix ones(3, 1.0);
  auto o = power_iteration(ones, 1e-12, 100);
  CHECK(o.eigenvalue == doctest::Approx(3.0));
  CHECK(o.residual <= 1e-12);

  Matrix zero(2, 0.0);
  auto z = power_iteration(zero, 1e-12, 100);
  CHECK(z.eigenvalue == 0.0);

  Matrix rot(2);
  rot(0, 1) = -1;
  rot(1, 0) = 1;
  CHECK(code_of([&] { power_iteration(rot, 1e-12, 500); }) == ErrorCode::NoConvergence);
  try {
    power_iteration(rot, 1e-12, 500);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
  Matrix bad(1, NAN);
  CHECK(code_of([&] { power_iteration(bad, 1e-12, 10); }) == ErrorCode::InvalidParams);
}

TEST_CASE("power iteration against a dense solver") {
  GameRng rng(21, "sym");
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next() % 7);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) m(i, j) = m(j, i) = 2 * rng.uniform() - 1;
    }
    auto ref = oracle::dominant_symmetric(m);
    REQUIRE(ref);
    if (ref->gap < 1e-3) continue;
    auto got = power_iteration(oracle::to_matrix(m), kEigenTolerance, kEigenMaxIter);
    CHECK(got.eigenvalue == doctest::Approx(ref->value).epsilon(1e-8));
    CHECK(oracle::max_diff(got.vector, ref->vector) < 1e-8);
    ++compared;
  }
  CHECK(compared > 180);
}

TEST_CASE("eigen ratings") {
  auto recs = pool({spec("always_cooperate"), spec("always_defect")}, 1, false);
  auto cm = cooperation_matrix(recs);
  auto j = eigenjesus(cm);
  CHECK(j.vector[0] > j.vector[1]);
  auto mm = eigenmoses_matrix(cm);
  CHECK(mm(0, 1) == 1.0);
  CHECK(mm(1, 0) == -1.0);
  CHECK(mm(0, 0) == 0.0);

  // Imputation: a pair that never met takes the row mean.
  std::vector<MatchRecord> partial{scripted("CC", "DD", "x", "y"), scripted("CD", "CC", "x", "z")};
  auto pm = cooperation_matrix(partial);
  CHECK_FALSE(pm.entries[1][2]);
  auto jm = eigenjesus_matrix(pm);
  CHECK(jm(0, 1) == 1.0);
  CHECK(jm(0, 2) == 0.5);
  CHECK(jm(1, 2) == jm(1, 0));
  CHECK(jm(2, 1) == jm(2, 0));
}

TEST_CASE("eigen ratings are invariant under relabeling") {
  auto recs = pool({spec("always_cooperate"), spec("always_defect"), spec("tit_for_tat"), spec("random")}, 3, false);
  std::vector<std::string> order{"always_cooperate", "always_defect", "tit_for_tat", "random"};
  std::vector<std::string> perm{"random", "tit_for_tat", "always_cooperate", "always_defect"};
  auto a = eigenjesus(cooperation_matrix(recs, order));
  auto b = eigenjesus(cooperation_matrix(recs, perm));
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto k = static_cast<std::size_t>(std::find(perm.begin(), perm.end(), order[i]) - perm.begin());
    CHECK(a.vector[i] == doctest::Approx(b.vector[k]).epsilon(1e-9));
  }
  for (double x : a.vector) CHECK(x >= 0);
}

TEST_CASE("cooperation rate series") {
  auto r = scripted("CDCDCD", "CCCCCC");
  auto s = cooperation_rate_series(r, "a", 2);
  CHECK(s[0].value == 1.0);
  for (std::size_t t = 1; t < s.size(); ++t) CHECK(s[t].value == 0.5);
  auto tft = test::play(spec("tit_for_tat"), spec("always_defect"), Horizon::fixed(50), 0);
  CHECK(cooperation_rate_series(tft, "tit_for_tat", 5)[9].value == 0.0);
  CHECK(code_of([&] { cooperation_rate_series(tft, "x", 5); }) == ErrorCode::UnknownPlayer);
  CHECK(code_of([&] { cooperation_rate_series(tft, "tit_for_tat", 0); }) == ErrorCode::InvalidParams);
}

TEST_CASE("adaptation of tit for tat to a defecting switch") {
  auto opp = compose_switch(spec("always_cooperate"), spec("always_defect"), 26);
  std::vector<MatchRecord> recs;
  for (std::uint64_t s = 0; s < 3; ++s) recs.push_back(test::play(spec("tit_for_tat"), opp, Horizon::fixed(50), s));
  auto rep = adaptation_report(recs, "tit_for_tat", 1, 0.01);
  CHECK(rep.adaptation_speed == 2);
  CHECK(rep.post_cooperations == 3);
  CHECK(rep.pre_rate == 1.0);
  CHECK(rep.baseline_rate == 0.0);
  CHECK(rep.recovery_curve.front().offset == -1);
  CHECK(rep.recovery_curve.back().offset == 24);
  CHECK(rep.speed_mean == 2.0);
  CHECK(rep.speed_sd == 0.0);
}

TEST_CASE("adaptation of an unchanged player") {
  auto opp = compose_switch(spec("always_cooperate"), spec("always_defect"), 26);
  std::vector<MatchRecord> recs{test::play(spec("always_cooperate"), opp, Horizon::fixed(50), 0)};
  auto rep = adaptation_report(recs, "always_cooperate", 5, 0.1);
  REQUIRE(rep.adaptation_speed);
  CHECK(*rep.adaptation_speed <= 1);
  for (const auto& p : rep.recovery_curve) CHECK(p.value == 1.0);
  // Full window after the switch: every round pays L instead of R.
  CHECK(rep.payoff_delta_curve.back().value == doctest::Approx(-3.0));
  for (const auto& p : rep.recovery_rate_curve) CHECK(p.value == 1.0);
}

TEST_CASE("adaptation errors") {
  std::vector<MatchRecord> plain{scripted("CCCCCCCCCC", "CCCCCCCCCC")};
  CHECK(code_of([&] { adaptation_report(plain, "a", 2, 0.1); }) == ErrorCode::MissingSwitchMetadata);
  std::vector<MatchRecord> early{with_switch(plain[0], 2)};
  CHECK(code_of([&] { adaptation_report(early, "a", 2, 0.1); }) == ErrorCode::InsufficientRounds);
  std::vector<MatchRecord> late{with_switch(plain[0], 10)};
  CHECK(code_of([&] { adaptation_report(late, "a", 2, 0.1); }) == ErrorCode::InsufficientRounds);
  std::vector<MatchRecord> mixed{with_switch(plain[0], 5), with_switch(plain[0], 6)};
  CHECK(code_of([&] { adaptation_report(mixed, "a", 2, 0.1); }) == ErrorCode::MissingSwitchMetadata);
  std::vector<MatchRecord> ok{with_switch(plain[0], 5)};
  CHECK(code_of([&] { adaptation_report(ok, "a", 2, 0.0); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { adaptation_report(ok, "a", 0, 0.1); }) == ErrorCode::InvalidParams);
  CHECK_NOTHROW(adaptation_report(ok, "a", 2, 0.1));
}

TEST_CASE("post rate counts every round from the switch") {
  std::vector<MatchRecord> recs{with_switch(scripted("CCCCDDCCDD", "CCCCCCCCCC"), 5)};
  auto rep = adaptation_report(recs, "a", 2, 0.1);
  CHECK(rep.post_moves == 6);
  CHECK(rep.post_cooperations == 2);
  CHECK(rep.post_rate == doctest::Approx(2.0 / 6.0));
  CHECK(rep.pre_rate == 1.0);
  CHECK(rep.baseline_rate == 0.0);
}

TEST_CASE("win series") {
  std::vector<MatchRecord> ad{test::play(spec("always_defect"), spec("always_cooperate"), Horizon::fixed(10), 0)};
  auto w = win_series(ad, "always_defect");
  for (std::size_t t = 0; t < w.size(); ++t) {
    CHECK(w[t].cum_wins == static_cast<double>(t + 1));
    CHECK(w[t].cum_diff == 5.0 * static_cast<double>(t + 1));
  }
  std::vector<MatchRecord> tft{test::play(spec("tit_for_tat"), spec("always_defect"), Horizon::fixed(10), 0)};
  for (const auto& p : win_series(tft, "tit_for_tat")) CHECK(p.cum_diff == -5.0);
  std::vector<MatchRecord> cc{test::play(spec("always_cooperate"), spec("always_cooperate"), Horizon::fixed(10), 0)};
  for (const auto& p : win_series(cc, "always_cooperate")) {
    CHECK(p.cum_wins == 0.0);
    CHECK(p.cum_diff == 0.0);
  }
  std::vector<MatchRecord> ind{test::play(spec("always_defect"), spec("always_cooperate"), Horizon::indefinite(0.1), 0)};
  CHECK(code_of([&] { win_series(ind, "always_defect"); }) == ErrorCode::MixedHorizons);
}

TEST_CASE("final differential equals the mean score difference") {
  auto recs = pool({spec("random"), spec("tit_for_tat"), spec("win_stay_lose_shift")}, 4, false, 20);
  std::vector<MatchRecord> mine;
  double total = 0;
  for (const auto& r : recs) {
    if (r.player_a_id == "random" || r.player_b_id == "random") {
      mine.push_back(r);
      total += r.player_a_id == "random" ? r.total_a - r.total_b : r.total_b - r.total_a;
    }
  }
  CHECK(win_series(mine, "random").back().cum_diff == doctest::Approx(total / static_cast<double>(mine.size())));
}

TEST_CASE("report and csv") {
  auto recs = pool({spec("always_cooperate"), spec("always_defect"), spec("tit_for_tat")}, 2, false);
  auto rep = compute_metrics(recs);
  REQUIRE(rep.players.size() == 3);
  // AllC and TFT cooperate fully with each other and nobody plays itself, so
  // the rate matrix has eigenvalues 1 and -1: no dominant pair exists.
  CHECK_FALSE(rep.morality.eigenjesus);
  CHECK(rep.morality.eigenjesus_error.find("residual") != std::string::npos);
  auto with_random = pool({spec("always_cooperate"), spec("always_defect"), spec("tit_for_tat"), spec("random")}, 2, false);
  CHECK(compute_metrics(with_random).morality.eigenjesus);
  auto table = table_csv(rep);
  CHECK(table.rfind("Strategy,Coop. Rate,Good Partner,Forgiveness,Retaliation,Generosity\n", 0) == 0);
  CHECK(table.find("tit_for_tat,") != std::string::npos);
  auto csv = metrics_csv(rep);
  CHECK(csv.rfind("player,metric,value,support\n", 0) == 0);
  auto j = to_json(rep);
  CHECK(j["players"].size() == 3);
  CHECK(j.dump() == to_json(compute_metrics(recs)).dump());
}

}  // TEST_SUITE

// SPDX-License-Identifier: Apache-2.0
#include <functional>

#include "doctest.h"
#include "ipd/error.hpp"
#include "ipd/strategy.hpp"
#include "support.hpp"

using namespace ipd;
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

HistoryEntry entry(int code) {
  return {code & 2 ? Action::D : Action::C, code & 1 ? Action::D : Action::C};
}

// All histories of length n over the four (self, opp) pairs.
void each_history(int n, const std::function<void(const History&)>& f) {
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 4;
  for (int idx = 0; idx < total; ++idx) {
    History h;
    int x = idx;
    for (int i = 0; i < n; ++i) {
      h.push_back(entry(x % 4));
      x /= 4;
    }
    f(h);
  }
}

double prob(const StrategySpec& s, const History& h) {
  auto p = make_builtin(s);
  p->begin_match(MatchInfo{});
  return p->cooperation_probability(h);
}

const std::vector<StrategySpec> kBuiltins = {
    spec("always_cooperate"),     spec("always_defect"),         spec("grim"),
    spec("tit_for_tat"),          spec("two_step_copy"),         spec("generous_tit_for_tat", {{"p", 0.7}}),
    spec("win_stay_lose_shift"),  spec("suspicious_tit_for_tat"), spec("random", {{"p_coop", 0.25}}),
    spec("first_by_joss"),        spec("first_by_grofman"),      spec("first_by_shubik"),
    spec("first_by_feld"),        spec("first_by_tullock"),      spec("first_by_downing"),
    spec("first_by_anonymous"),
    spec("switch", {{"a", "always_cooperate"}, {"b", "tit_for_tat"}, {"switch_round", 3}}),
};

}  // namespace

TEST_SUITE("strategy") {

TEST_CASE("tit for tat over every history up to length 6") {
  for (int n = 0; n <= 6; ++n) {
    each_history(n, [&](const History& h) {
      const double expected = h.empty() ? 1.0 : (h.back().opp == Action::C ? 1.0 : 0.0);
      CHECK(prob(spec("tit_for_tat"), h) == expected);
    });
  }
}

TEST_CASE("grim and suspicious tit for tat over length-5 histories") {
  each_history(5, [&](const History& h) {
    bool any_d = false;
    for (const auto& e : h) any_d = any_d || e.opp == Action::D;
    CHECK(prob(spec("grim"), h) == (any_d ? 0.0 : 1.0));
    CHECK(prob(spec("suspicious_tit_for_tat"), h) == (h.back().opp == Action::C ? 1.0 : 0.0));
  });
  CHECK(prob(spec("suspicious_tit_for_tat"), {}) == 0.0);
}

TEST_CASE("win stay lose shift keeps after R or H") {
  CHECK(prob(spec("win_stay_lose_shift"), {}) == 1.0);
  CHECK(prob(spec("win_stay_lose_shift"), {{Action::C, Action::C}}) == 1.0);  // R
  CHECK(prob(spec("win_stay_lose_shift"), {{Action::D, Action::C}}) == 0.0);  // H
  CHECK(prob(spec("win_stay_lose_shift"), {{Action::C, Action::D}}) == 0.0);  // L
  CHECK(prob(spec("win_stay_lose_shift"), {{Action::D, Action::D}}) == 1.0);  // P
}

TEST_CASE("two step copy") {
  CHECK(prob(spec("two_step_copy"), {}) == 1.0);
  CHECK(prob(spec("two_step_copy"), {{Action::C, Action::D}}) == 1.0);
  CHECK(prob(spec("two_step_copy"), {{Action::C, Action::D}, {Action::C, Action::C}}) == 0.0);
  CHECK(prob(spec("two_step_copy"), {{Action::C, Action::C}, {Action::C, Action::D}}) == 1.0);
}

TEST_CASE("generous tit for tat boundaries") {
  const History after_d{{Action::C, Action::D}};
  CHECK(prob(spec("generous_tit_for_tat", {{"p", 0.9}}), after_d) == doctest::Approx(0.1));
  CHECK(prob(spec("generous_tit_for_tat", {{"p", 0.0}}), after_d) == 1.0);
  CHECK(prob(spec("generous_tit_for_tat", {{"p", 0.9}}), {{Action::D, Action::C}}) == 1.0);
  CHECK(code_of([] { make_strategy(spec("generous_tit_for_tat", {{"p", 1.0}})); }) ==
        ErrorCode::InvalidParams);
  auto direct = strategies::generous_tit_for_tat(1.0);
  CHECK(direct->cooperation_probability(after_d) == 0.0);
  CHECK(code_of([] { strategies::generous_tit_for_tat(1.5); }) == ErrorCode::InvalidParams);
}

TEST_CASE("deterministic probabilities consume no randomness") {
  GameRng a(5, "x"), b(5, "x");
  CHECK(sample_action(1.0, a) == Action::C);
  CHECK(sample_action(0.0, a) == Action::D);
  CHECK(a.next() == b.next());
}

TEST_CASE("random strategy frequency") {
  GameRng rng(1, "player_a");
  int c = 0;
  for (int i = 0; i < 20000; ++i) c += sample_action(0.25, rng) == Action::C;
  CHECK(c / 20000.0 == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("replay from full history equals incremental play") {
  for (const auto& s : kBuiltins) {
    CAPTURE(s.label());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto rec = test::play(s, spec("random", {{"p_coop", 0.6}}), Horizon::fixed(30), seed);
      const auto h = history_for(rec, true);
      auto incremental = make_builtin(s);
      incremental->begin_match(MatchInfo{PayoffMatrix::classic(), 30});
      std::vector<double> inc;
      for (std::size_t t = 0; t <= h.size(); ++t) {
        inc.push_back(incremental->cooperation_probability(History(h.begin(), h.begin() + t)));
      }
      auto fresh = make_builtin(s);
      fresh->begin_match(MatchInfo{PayoffMatrix::classic(), 30});
      CHECK(fresh->cooperation_probability(h) == inc.back());
    }
  }
}

TEST_CASE("matches are reproducible from the seed") {
  for (const auto& s : kBuiltins) {
    auto r1 = test::play(s, spec("random"), Horizon::indefinite(0.05), 17);
    auto r2 = test::play(s, spec("random"), Horizon::indefinite(0.05), 17);
    CHECK(r1 == r2);
  }
}

TEST_CASE("one instance can play several matches") {
  for (const auto& s : kBuiltins) {
    CAPTURE(s.label());
    auto reused = make_strategy(s);
    reused->set_id("x");
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto opp = make_strategy(spec("random", {{"p_coop", 0.4}}));
      opp->set_id("o");
      auto got = play_match(*reused, *opp, PayoffMatrix::classic(), Horizon::fixed(20), seed);
      auto want = test::play(s, spec("random", {{"p_coop", 0.4}}), Horizon::fixed(20), seed);
      CHECK(got.rounds == want.rounds);
    }
  }
}

TEST_CASE("switch composite") {
  auto sw = compose_switch(spec("always_cooperate"), spec("always_defect"), 4);
  auto rec = test::play(sw, spec("tit_for_tat"), Horizon::fixed(6), 0);
  std::string moves;
  for (const auto& r : rec.rounds) moves += to_char(r.action_a);
  CHECK(moves == "CCCDDD");
  CHECK(rec.metadata.at("switch_round") == "4");

  // The post-switch strategy sees the whole history: grim triggered before k.
  auto sw2 = compose_switch(spec("always_cooperate"), spec("grim"), 4);
  auto rec2 = test::play(sw2, spec("always_defect"), Horizon::fixed(6), 0);
  CHECK(rec2.rounds[3].action_a == Action::D);

  CHECK(code_of([] { compose_switch(spec("always_cooperate"), spec("grim"), 1); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] {
          compose_switch(spec("always_cooperate"),
                         compose_switch(spec("always_cooperate"), spec("grim"), 3), 5);
        }) == ErrorCode::InvalidParams);
}

TEST_CASE("catalog errors") {
  CHECK(code_of([] { make_strategy(spec("nope")); }) == ErrorCode::UnknownStrategy);
  CHECK(code_of([] { make_strategy(spec("random", {{"p_coop", 2}})); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { make_strategy(spec("random", {{"q", 0.5}})); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { make_strategy(spec("random", {{"p_coop", "x"}})); }) == ErrorCode::InvalidParams);
  CHECK(code_of([] { make_strategy(spec("switch", {{"a", "always_cooperate"}})); }) ==
        ErrorCode::InvalidParams);
  Catalog c = Catalog::standard();
  CHECK(code_of([&] { c.add(c.entry("grim")); }) == ErrorCode::InvalidParams);
}

TEST_CASE("registration hook") {
  Catalog c = Catalog::standard();
  c.add(CatalogEntry{"alternator", {}, "C, D, C, D", false,
                     [](const StrategySpec&, const Catalog&) -> std::unique_ptr<Player> {
                       struct Alt : Strategy {
                         double next_probability(const History& h) override { return h.size() % 2 == 0; }
                       };
                       return std::make_unique<Alt>();
                     }});
  auto p = make_strategy(spec("alternator"), c);
  CHECK(p->id() == "alternator");
}

TEST_CASE("labels and listing") {
  CHECK(spec("tit_for_tat").label() == "tit_for_tat");
  CHECK(spec("random", {{"p_coop", 0.5}}).label() == "random(p_coop=0.5)");
  auto list = list_strategies();
  bool found = false;
  for (const auto& s : list) found = found || (s.name == "first_by_joss" && s.optional);
  CHECK(found);
  CHECK(list.front().name == "always_cooperate");
}

TEST_CASE("spec json") {
  CHECK(spec_from_json(Json("grim")) == spec("grim"));
  auto s = spec("random", {{"p_coop", 0.1}});
  CHECK(spec_from_json(Json(s)) == s);
  CHECK(code_of([] { spec_from_json(Json{{"name", "x"}, {"extra", 1}}); }) == ErrorCode::ConfigError);
}

}  // TEST_SUITE

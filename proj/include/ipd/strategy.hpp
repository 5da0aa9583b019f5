// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ipd/game.hpp"

namespace ipd {

// Declarative player description: {"name": ..., "params": {...}}.
struct StrategySpec {
  std::string name;
  Json params = Json::object();

  // Canonical identifier, e.g. "generous_tit_for_tat(p=0.9)".
  std::string label() const;

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

void to_json(Json& j, const StrategySpec& s);
StrategySpec spec_from_json(const Json& j);

// A player defined by a cooperation probability over the history. Internal
// state is advanced by replaying history entries not seen yet, so a fresh
// instance given a full history reaches the same state as one that was fed
// round by round.
class Strategy : public Player {
 public:
  double cooperation_probability(const History& h);

  // Clears per-match state so one instance can play several matches.
  void begin_match(const MatchInfo& info) override;
  Action choose(const History& h, const MatchInfo& info, GameRng& rng) final;

 protected:
  // Called once per history entry, in order; `round` is 1-based.
  virtual void observe(const HistoryEntry&, std::size_t /*round*/) {}
  virtual void reset() {}
  virtual double next_probability(const History& h) = 0;

  const MatchInfo& info() const { return info_; }

 private:
  MatchInfo info_;
  std::size_t consumed_ = 0;
};

// Deterministic probabilities (0 or 1) consume no randomness.
Action sample_action(double p, GameRng& rng);

struct ParamInfo {
  std::string name;
  std::string type;
  Json default_value;  // null when required
  std::string description;
};

class Catalog;
using StrategyFactory =
    std::function<std::unique_ptr<Player>(const StrategySpec&, const Catalog&)>;

struct CatalogEntry {
  std::string name;
  std::vector<ParamInfo> params;
  std::string description;
  bool optional = false;  // historical entries, not required by experiments
  StrategyFactory factory;
};

class Catalog {
 public:
  // Built-in classical, historical, switch and external-agent entries.
  static Catalog standard();

  // Registration hook for additional strategies; rejects duplicate names.
  void add(CatalogEntry entry);

  bool contains(const std::string& name) const;
  const CatalogEntry& entry(const std::string& name) const;

  // Throws UnknownStrategy or InvalidParams.
  std::unique_ptr<Player> make(const StrategySpec& spec) const;

  // Registration order.
  const std::vector<CatalogEntry>& entries() const { return entries_; }

 private:
  std::vector<CatalogEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Immutable process-wide catalog (Catalog::standard()).
const Catalog& default_catalog();

std::unique_ptr<Player> make_strategy(const StrategySpec& spec);
std::unique_ptr<Player> make_strategy(const StrategySpec& spec, const Catalog& catalog);

// make_strategy for specs that must resolve to a probability-defined
// strategy; external agents are rejected with InvalidParams.
std::unique_ptr<Strategy> make_builtin(const StrategySpec& spec,
                                       const Catalog& catalog = default_catalog());

StrategySpec compose_switch(const StrategySpec& a, const StrategySpec& b, int switch_round);

struct StrategyInfo {
  std::string name;
  std::vector<ParamInfo> params;
  std::string description;
  bool optional;
};
std::vector<StrategyInfo> list_strategies(const Catalog& catalog = default_catalog());

// Validates params against the entry's schema (unknown keys, types) and
// fills defaults.
Json resolve_params(const CatalogEntry& entry, const StrategySpec& spec);

namespace strategies {

// Direct constructors, used by the catalog and by boundary tests that need
// parameter values outside the catalog's validated range.
std::unique_ptr<Strategy> always_cooperate();
std::unique_ptr<Strategy> always_defect();
std::unique_ptr<Strategy> grim();
std::unique_ptr<Strategy> tit_for_tat();
std::unique_ptr<Strategy> suspicious_tit_for_tat();
std::unique_ptr<Strategy> two_step_copy();
std::unique_ptr<Strategy> generous_tit_for_tat(double defect_probability);
std::unique_ptr<Strategy> win_stay_lose_shift();
std::unique_ptr<Strategy> random(double p_coop);

std::unique_ptr<Strategy> first_by_joss(double p);
std::unique_ptr<Strategy> first_by_grofman();
std::unique_ptr<Strategy> first_by_shubik();
std::unique_ptr<Strategy> first_by_feld(double start_p, double end_p, int rounds_of_decay);
std::unique_ptr<Strategy> first_by_tullock();
std::unique_ptr<Strategy> first_by_downing();
std::unique_ptr<Strategy> first_by_anonymous();

std::unique_ptr<Strategy> switch_composite(std::unique_ptr<Strategy> first, StrategySpec second,
                                           int switch_round, const Catalog& catalog);

}  // namespace strategies

}  // namespace ipd

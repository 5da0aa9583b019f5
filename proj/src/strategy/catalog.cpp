// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "ipd/agent.hpp"
#include "ipd/error.hpp"
#include "ipd/strategy.hpp"

namespace ipd {

namespace {

bool matches_type(const std::string& type, const Json& v) {
  if (type == "number" || type == "probability") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "string") return v.is_string();
  if (type == "spec") return v.is_object() || v.is_string();
  if (type == "object") return v.is_object();
  return false;
}

using Maker = std::unique_ptr<Strategy> (*)();

CatalogEntry simple(std::string name, std::string description, Maker make, bool optional = false) {
  return CatalogEntry{std::move(name), {}, std::move(description), optional,
                      [make](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
                        resolve_params(cat.entry(spec.name), spec);
                        return make();
                      }};
}

double probability_param(const Json& params, const char* key) {
  double p = params[key].get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::InvalidParams, std::string(key) + " must lie in [0, 1]");
  }
  return p;
}

}  // namespace

Json resolve_params(const CatalogEntry& entry, const StrategySpec& spec) {
  if (!spec.params.is_object()) fail(ErrorCode::InvalidParams, spec.name + ": params must be an object");
  std::set<std::string> known;
  for (const auto& p : entry.params) known.insert(p.name);
  for (const auto& [k, _] : spec.params.items()) {
    if (!known.count(k)) fail(ErrorCode::InvalidParams, spec.name + ": unknown parameter \"" + k + "\"");
  }
  Json out = Json::object();
  for (const auto& p : entry.params) {
    if (spec.params.contains(p.name)) {
      const auto& v = spec.params[p.name];
      if (!matches_type(p.type, v)) {
        fail(ErrorCode::InvalidParams, spec.name + ": parameter \"" + p.name + "\" must be " + p.type);
      }
      out[p.name] = v;
    } else if (!p.default_value.is_null()) {
      out[p.name] = p.default_value;
    } else {
      fail(ErrorCode::InvalidParams, spec.name + ": missing required parameter \"" + p.name + "\"");
    }
  }
  return out;
}

void Catalog::add(CatalogEntry entry) {
  if (index_.count(entry.name)) {
    fail(ErrorCode::InvalidParams, "strategy \"" + entry.name + "\" is already registered");
  }
  index_[entry.name] = entries_.size();
  entries_.push_back(std::move(entry));
}

bool Catalog::contains(const std::string& name) const { return index_.count(name) > 0; }

const CatalogEntry& Catalog::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::UnknownStrategy, "unknown strategy \"" + name + "\"");
  return entries_[it->second];
}

std::unique_ptr<Player> Catalog::make(const StrategySpec& spec) const {
  auto player = entry(spec.name).factory(spec, *this);
  player->set_id(spec.label());
  return player;
}

Catalog Catalog::standard() {
  Catalog c;
  c.add(simple("always_cooperate", "Cooperates every round.", &strategies::always_cooperate));
  c.add(simple("always_defect", "Defects every round.", &strategies::always_defect));
  c.add(simple("grim", "Cooperates until the opponent's first defection, then defects forever.",
               &strategies::grim));
  c.add(simple("tit_for_tat", "Cooperates first, then copies the opponent's previous move.",
               &strategies::tit_for_tat));
  c.add(simple("two_step_copy",
               "Copies the opponent's move from two rounds back; cooperates on rounds 1 and 2.",
               &strategies::two_step_copy));
  c.add(CatalogEntry{
      "generous_tit_for_tat",
      {{"p", "probability", 0.9, "probability of defecting after an opponent defection (p < 1)"}},
      "Tit for tat that answers a defection with defection only with probability p.",
      false,
      [](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
        auto params = resolve_params(cat.entry(spec.name), spec);
        double p = params["p"].get<double>();
        if (!(p >= 0.0 && p < 1.0)) {
          fail(ErrorCode::InvalidParams, "generous_tit_for_tat requires 0 <= p < 1");
        }
        return strategies::generous_tit_for_tat(p);
      }});
  c.add(simple("win_stay_lose_shift",
               "Repeats its last move after the opponent cooperated, switches otherwise.",
               &strategies::win_stay_lose_shift));
  c.add(simple("suspicious_tit_for_tat", "Tit for tat that defects on the first round.",
               &strategies::suspicious_tit_for_tat));
  c.add(CatalogEntry{"random",
                     {{"p_coop", "probability", 0.5, "cooperation probability every round"}},
                     "Cooperates with a constant probability.",
                     false,
                     [](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
                       auto params = resolve_params(cat.entry(spec.name), spec);
                       return strategies::random(probability_param(params, "p_coop"));
                     }});
  c.add(CatalogEntry{
      "switch",
      {{"a", "spec", nullptr, "strategy played before the switch round"},
       {"b", "spec", nullptr, "strategy played from the switch round on"},
       {"switch_round", "integer", nullptr, "first round played by b (>= 2)"}},
      "Plays a before switch_round and b afterwards; b is initialized on the full history.",
      false,
      [](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
        auto params = resolve_params(cat.entry(spec.name), spec);
        auto a = spec_from_json(params["a"]);
        auto b = spec_from_json(params["b"]);
        int k = params["switch_round"].get<int>();
        compose_switch(a, b, k);  // validates nesting and k
        // b is built lazily; building it once here surfaces bad specs early.
        make_builtin(b, cat);
        return strategies::switch_composite(make_builtin(a, cat), b, k, cat);
      }});
  c.add(CatalogEntry{
      "external_agent",
      {{"kind", "string", nullptr, "\"chat_http\" or \"subprocess\""},
       {"address", "string", nullptr, "endpoint URL or command line"},
       {"model", "string", "", "model name (chat_http)"},
       {"credentials_env", "string", "", "environment variable holding the API key"},
       {"timeout_ms", "integer", 30000, "per-request timeout"},
       {"max_retries", "integer", 2, "retries after unparseable replies"},
       {"temperature", "number", 1.0, "sampling temperature (chat_http)"},
       {"template", "string", "default", "prompt template name (chat_http)"},
       {"history_rendering", "string", "", "message_per_round or single_summary_block"}},
      "External decision-maker: chat-completions endpoint or subprocess.",
      false,
      [](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
        resolve_params(cat.entry(spec.name), spec);
        try {
          return std::make_unique<AgentPlayer>(agent_config_from_json(spec.params));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::TemplateError) {
            fail(ErrorCode::InvalidParams, std::string("external_agent: ") + e.what());
          }
          throw;
        }
      }});

  // Historical first-tournament entries; optional.
  c.add(CatalogEntry{"first_by_joss",
                     {{"p", "probability", 0.9, "cooperation probability after mutual cooperation"}},
                     "Tit for tat that sneaks in a defection with probability 1 - p.",
                     true,
                     [](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
                       auto params = resolve_params(cat.entry(spec.name), spec);
                       return strategies::first_by_joss(probability_param(params, "p"));
                     }});
  c.add(simple("first_by_grofman",
               "Cooperates if both played the same move last round, else with probability 2/7.",
               &strategies::first_by_grofman, true));
  c.add(simple("first_by_shubik", "Retaliates with escalating runs of defection.",
               &strategies::first_by_shubik, true));
  c.add(CatalogEntry{
      "first_by_feld",
      {{"start_p", "probability", 1.0, "initial cooperation probability after opponent C"},
       {"end_p", "probability", 0.5, "final cooperation probability after opponent C"},
       {"rounds_of_decay", "integer", 200, "rounds over which the probability decays"}},
      "Never cooperates after a defection; cooperation after C decays linearly.",
      true,
      [](const StrategySpec& spec, const Catalog& cat) -> std::unique_ptr<Player> {
        auto params = resolve_params(cat.entry(spec.name), spec);
        return strategies::first_by_feld(probability_param(params, "start_p"),
                                         probability_param(params, "end_p"),
                                         params["rounds_of_decay"].get<int>());
      }});
  c.add(simple("first_by_tullock",
               "Cooperates 11 rounds, then 10% less often than the opponent over the last 10.",
               &strategies::first_by_tullock, true));
  c.add(simple("first_by_downing",
               "Estimates the opponent's conditional responses and maximizes expected payoff.",
               &strategies::first_by_downing, true));
  c.add(simple("first_by_anonymous", "Cooperates with a random probability in [0.3, 0.7].",
               &strategies::first_by_anonymous, true));
  return c;
}

const Catalog& default_catalog() {
  static const Catalog catalog = Catalog::standard();
  return catalog;
}

std::unique_ptr<Player> make_strategy(const StrategySpec& spec) {
  return default_catalog().make(spec);
}

std::unique_ptr<Player> make_strategy(const StrategySpec& spec, const Catalog& catalog) {
  return catalog.make(spec);
}

std::unique_ptr<Strategy> make_builtin(const StrategySpec& spec, const Catalog& catalog) {
  auto player = catalog.make(spec);
  auto* strategy = dynamic_cast<Strategy*>(player.get());
  if (!strategy) {
    fail(ErrorCode::InvalidParams, "\"" + spec.name + "\" is not a built-in strategy");
  }
  player.release();
  return std::unique_ptr<Strategy>(strategy);
}

}  // namespace ipd

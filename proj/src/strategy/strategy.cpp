// SPDX-License-Identifier: Apache-2.0
#include "ipd/strategy.hpp"

#include <sstream>

#include "ipd/error.hpp"
#include "ipd/json_util.hpp"

namespace ipd {

namespace {

std::string param_value_label(const Json& v) {
  if (v.is_object() && v.contains("name") && v["name"].is_string()) {
    return spec_from_json(v).label();
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string StrategySpec::label() const {
  if (!params.is_object() || params.empty()) return name;
  std::ostringstream os;
  os << name << '(';
  bool first = true;
  for (const auto& [k, v] : params.items()) {
    if (!first) os << ',';
    first = false;
    os << k << '=' << param_value_label(v);
  }
  os << ')';
  return os.str();
}

void to_json(Json& j, const StrategySpec& s) {
  j = Json{{"name", s.name}, {"params", s.params}};
}

StrategySpec spec_from_json(const Json& j) {
  if (j.is_string()) return StrategySpec{j.get<std::string>(), Json::object()};
  json_util::expect_keys(j, "strategy spec", {"name"}, {"params"});
  StrategySpec s;
  s.name = json_util::string(j, "name");
  if (j.contains("params")) {
    if (!j["params"].is_object()) fail(ErrorCode::ConfigError, "strategy params must be an object");
    s.params = j["params"];
  }
  return s;
}

void Strategy::begin_match(const MatchInfo& info) {
  info_ = info;
  consumed_ = 0;
  reset();
}

double Strategy::cooperation_probability(const History& h) {
  if (h.size() < consumed_) {
    fail(ErrorCode::InvalidParams, "history is shorter than the rounds already observed");
  }
  for (; consumed_ < h.size(); ++consumed_) {
    observe(h[consumed_], consumed_ + 1);
  }
  return next_probability(h);
}

Action Strategy::choose(const History& h, const MatchInfo&, GameRng& rng) {
  return sample_action(cooperation_probability(h), rng);
}

Action sample_action(double p, GameRng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::InvalidParams, "cooperation probability outside [0, 1]");
  }
  if (p >= 1.0) return Action::C;
  if (p <= 0.0) return Action::D;
  return rng.uniform() < p ? Action::C : Action::D;
}

StrategySpec compose_switch(const StrategySpec& a, const StrategySpec& b, int switch_round) {
  if (a.name == "switch" || b.name == "switch") {
    fail(ErrorCode::InvalidParams, "switch composites cannot be nested");
  }
  if (switch_round < 2) fail(ErrorCode::InvalidParams, "switch_round must be >= 2");
  return StrategySpec{"switch", Json{{"a", a}, {"b", b}, {"switch_round", switch_round}}};
}

std::vector<StrategyInfo> list_strategies(const Catalog& catalog) {
  std::vector<StrategyInfo> out;
  for (const auto& e : catalog.entries()) {
    out.push_back({e.name, e.params, e.description, e.optional});
  }
  return out;
}

}  // namespace ipd

// SPDX-License-Identifier: Apache-2.0
#include "ipd/agent.hpp"
#include "ipd/error.hpp"

namespace ipd {

namespace {

PromptTemplate effective_template(const AgentEndpointConfig& cfg) {
  PromptTemplate t = template_named(cfg.template_name);
  if (cfg.rendering) t.rendering = *cfg.rendering;
  return t;
}

}  // namespace

AgentPlayer::AgentPlayer(AgentEndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind == AgentKind::ChatHttp) template_named(cfg_.template_name);
}

AgentPlayer::~AgentPlayer() = default;

void AgentPlayer::begin_match(const MatchInfo&) {
  transcript_.clear();
  if (cfg_.kind == AgentKind::Subprocess) process_ = std::make_unique<SubprocessAgent>(cfg_);
}

Action AgentPlayer::choose(const History& h, const MatchInfo& info, GameRng&) {
  MoveResult r;
  Json entry{{"round", h.size() + 1}};
  if (cfg_.kind == AgentKind::ChatHttp) {
    r = request_move(cfg_, render_prompt(effective_template(cfg_), info.payoffs, info.known_rounds, h));
    entry["messages"] = r.messages;
  } else {
    if (!process_) process_ = std::make_unique<SubprocessAgent>(cfg_);
    r = process_->step(h, info.payoffs, info.known_rounds);
    entry["request"] = move_request_json(h, info.payoffs, info.known_rounds);
  }
  entry["raw"] = r.raw;
  entry["action"] = std::string(1, to_char(r.action));
  entry["latency_ms"] = r.latency.count();
  entry["retry_count"] = r.retry_count;
  transcript_.push_back(std::move(entry));
  return r.action;
}

std::map<std::string, std::string> AgentPlayer::metadata() const {
  if (cfg_.kind == AgentKind::ChatHttp) return {{"prompt_template", cfg_.template_name}};
  return {};
}

MoveResult agent_preflight(const AgentEndpointConfig& cfg) {
  const History synthetic{{Action::C, Action::C}, {Action::C, Action::D}, {Action::D, Action::C}};
  const auto m = PayoffMatrix::classic();
  if (cfg.kind == AgentKind::ChatHttp) {
    return request_move(cfg, render_prompt(effective_template(cfg), m, std::optional<int>(50), synthetic));
  }
  SubprocessAgent agent(cfg);
  return agent.step(synthetic, m, 50);
}

}  // namespace ipd

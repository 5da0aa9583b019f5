// SPDX-License-Identifier: Apache-2.0
#include <regex>
#include <sstream>

#include "ipd/agent.hpp"
#include "ipd/error.hpp"
#include "ipd/json_util.hpp"

namespace ipd {

namespace {

std::string score_text(Score s) { return score_to_json(s).dump(); }

std::string action_word(Action a) { return a == Action::C ? "cooperate" : "defect"; }

std::string replace_all(std::string text, std::string_view key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

std::string round_line(std::size_t round, const HistoryEntry& e, const PayoffMatrix& m) {
  auto [own, opp] = payoff(m, e.self, e.opp);
  std::ostringstream os;
  os << "Round " << round << ": you chose " << action_word(e.self) << ", your opponent chose "
     << action_word(e.opp) << ". You received " << score_text(own)
     << " points; your opponent received " << score_text(opp) << " points.";
  return os.str();
}

HistoryRendering rendering_from_string(const std::string& s) {
  if (s == "message_per_round") return HistoryRendering::MessagePerRound;
  if (s == "single_summary_block") return HistoryRendering::SingleSummaryBlock;
  fail(ErrorCode::ConfigError, "unknown history_rendering \"" + s + "\"");
}

std::string rendering_to_string(HistoryRendering r) {
  return r == HistoryRendering::MessagePerRound ? "message_per_round" : "single_summary_block";
}

const std::string kRewardList =
    "Here are the rewards for each round:\n"
    "1. If both players cooperate, you both receive {R} points.\n"
    "2. If you defect and your opponent cooperates, you receive {H} points and your opponent "
    "receives {L} points.\n"
    "3. If you cooperate and your opponent defects, you receive {L} points and your opponent "
    "receives {H} points.\n"
    "4. If both players defect, you both receive {P} points.\n";

}  // namespace

void validate_template(const PromptTemplate& t) {
  for (std::string_view key : {"{H}", "{R}", "{P}", "{L}"}) {
    if (t.system_text.find(key) == std::string::npos) {
      fail(ErrorCode::TemplateError,
           "template \"" + t.name + "\" does not mention payoff " + std::string(key));
    }
  }
}

const std::vector<PromptTemplate>& builtin_templates() {
  static const std::vector<PromptTemplate> templates = [] {
    std::vector<PromptTemplate> t;
    t.push_back({"default",
                 "You are playing an iterated prisoner's dilemma game against an opponent.\n"
                 "In each round, you will be provided the history of all previous rounds, and "
                 "your task is to pick either cooperate or defect.\n" +
                     kRewardList + "{horizon_note}",
                 HistoryRendering::MessagePerRound});
    t.push_back({"summary",
                 "You are playing an iterated prisoner's dilemma game against an opponent.\n"
                 "Each turn you receive a summary of all previous rounds and pick either "
                 "cooperate or defect.\n" +
                     kRewardList + "{horizon_note}",
                 HistoryRendering::SingleSummaryBlock});
    t.push_back({"json",
                 "You are playing an iterated prisoner's dilemma game against an opponent.\n"
                 "In each round, you will be provided the history of all previous rounds, and "
                 "your task is to pick either cooperate or defect.\n" +
                     kRewardList +
                     "Reply with a JSON object such as {\"action\": \"C\"} or "
                     "{\"action\": \"D\"}.\n{horizon_note}",
                 HistoryRendering::MessagePerRound});
    for (const auto& tpl : t) validate_template(tpl);
    return t;
  }();
  return templates;
}

const PromptTemplate& template_named(const std::string& name) {
  for (const auto& t : builtin_templates()) {
    if (t.name == name) return t;
  }
  fail(ErrorCode::TemplateError, "unknown prompt template \"" + name + "\"");
}

void to_json(Json& j, const ChatMessage& m) { j = Json{{"role", m.role}, {"content", m.content}}; }

std::vector<ChatMessage> render_prompt(const PromptTemplate& t, const PayoffMatrix& m,
                                       std::optional<int> known_rounds, const History& h) {
  validate_template(t);
  std::string text = t.system_text;
  text = replace_all(text, "{H}", score_text(m.H()));
  text = replace_all(text, "{R}", score_text(m.R()));
  text = replace_all(text, "{P}", score_text(m.P()));
  text = replace_all(text, "{L}", score_text(m.L()));
  text = replace_all(text, "{horizon_note}",
                     known_rounds ? "The game lasts " + std::to_string(*known_rounds) +
                                        " rounds in total."
                                  : std::string());
  static const std::regex placeholder(R"(\{[A-Za-z_][A-Za-z0-9_]*\})");
  std::smatch match;
  if (std::regex_search(text, match, placeholder)) {
    fail(ErrorCode::TemplateError, "unresolved placeholder " + match.str() + " in template \"" +
                                       t.name + "\"");
  }

  std::vector<ChatMessage> out;
  out.push_back({"system", rtrim(text)});
  if (t.rendering == HistoryRendering::MessagePerRound) {
    for (std::size_t i = 0; i < h.size(); ++i) out.push_back({"user", round_line(i + 1, h[i], m)});
  } else if (!h.empty()) {
    std::string block = "History of previous rounds:";
    for (std::size_t i = 0; i < h.size(); ++i) block += "\n" + round_line(i + 1, h[i], m);
    out.push_back({"user", block});
  }
  out.push_back({"user", "Round " + std::to_string(h.size() + 1) +
                             ": choose your action. Reply with cooperate or defect."});
  return out;
}

std::vector<ChatMessage> render_prompt(const PromptTemplate& t, const PayoffMatrix& m,
                                       const Horizon& horizon, const History& h) {
  return render_prompt(t, m, horizon.disclosed_rounds(), h);
}

AgentEndpointConfig agent_config_from_json(const Json& j) {
  json_util::expect_keys(j, "agent endpoint", {"kind", "address"},
                         {"model", "credentials_env", "timeout_ms", "max_retries", "temperature",
                          "template", "history_rendering"});
  AgentEndpointConfig cfg;
  const auto kind = json_util::string(j, "kind");
  if (kind == "chat_http") {
    cfg.kind = AgentKind::ChatHttp;
  } else if (kind == "subprocess") {
    cfg.kind = AgentKind::Subprocess;
  } else {
    fail(ErrorCode::ConfigError, "agent kind must be \"chat_http\" or \"subprocess\"");
  }
  cfg.address = json_util::string(j, "address");
  if (cfg.address.empty()) fail(ErrorCode::ConfigError, "agent address is empty");
  if (j.contains("model")) cfg.model_name = json_util::string(j, "model");
  if (j.contains("credentials_env")) {
    cfg.credentials_env = json_util::string(j, "credentials_env");
    static const std::regex env_name("[A-Za-z_][A-Za-z0-9_]*");
    if (!cfg.credentials_env.empty() && !std::regex_match(cfg.credentials_env, env_name)) {
      fail(ErrorCode::ConfigError, "credentials_env must name an environment variable");
    }
  }
  if (j.contains("timeout_ms")) cfg.timeout = std::chrono::milliseconds(json_util::integer(j, "timeout_ms"));
  if (cfg.timeout.count() <= 0) fail(ErrorCode::ConfigError, "agent timeout must be positive");
  if (j.contains("max_retries")) cfg.max_retries = json_util::integer(j, "max_retries");
  if (cfg.max_retries < 0) fail(ErrorCode::ConfigError, "max_retries must be >= 0");
  if (j.contains("temperature")) cfg.temperature = json_util::number(j, "temperature");
  if (cfg.temperature < 0) fail(ErrorCode::ConfigError, "temperature must be >= 0");
  if (j.contains("template")) cfg.template_name = json_util::string(j, "template");
  template_named(cfg.template_name);
  if (j.contains("history_rendering")) {
    auto r = json_util::string(j, "history_rendering");
    if (!r.empty()) cfg.rendering = rendering_from_string(r);
  }
  return cfg;
}

void to_json(Json& j, const AgentEndpointConfig& cfg) {
  j = Json{{"kind", cfg.kind == AgentKind::ChatHttp ? "chat_http" : "subprocess"},
           {"address", cfg.address},
           {"model", cfg.model_name},
           {"credentials_env", cfg.credentials_env},
           {"timeout_ms", cfg.timeout.count()},
           {"max_retries", cfg.max_retries},
           {"temperature", cfg.temperature},
           {"template", cfg.template_name},
           {"history_rendering", cfg.rendering ? rendering_to_string(*cfg.rendering) : ""}};
}

}  // namespace ipd

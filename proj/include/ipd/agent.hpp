// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipd/game.hpp"

namespace ipd {

enum class AgentKind { ChatHttp, Subprocess };
enum class HistoryRendering { MessagePerRound, SingleSummaryBlock };

// Credentials are referenced by environment variable name and read only when
// a request is sent.
struct AgentEndpointConfig {
  AgentKind kind = AgentKind::Subprocess;
  std::string address;  // URL for ChatHttp, shell command line for Subprocess
  std::string model_name;
  std::string credentials_env;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  double temperature = 1.0;
  std::string template_name = "default";
  std::optional<HistoryRendering> rendering;  // overrides the template's own

  friend bool operator==(const AgentEndpointConfig&, const AgentEndpointConfig&) = default;
};

AgentEndpointConfig agent_config_from_json(const Json& j);
void to_json(Json& j, const AgentEndpointConfig& cfg);

struct PromptTemplate {
  std::string name;
  std::string system_text;  // placeholders {H} {R} {P} {L} {horizon_note}
  HistoryRendering rendering = HistoryRendering::MessagePerRound;
};

// Throws TemplateError if any of {H} {R} {P} {L} is missing.
void validate_template(const PromptTemplate& t);

const std::vector<PromptTemplate>& builtin_templates();
const PromptTemplate& template_named(const std::string& name);

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};
void to_json(Json& j, const ChatMessage& m);

// System message, history (per template rendering), then the move request.
std::vector<ChatMessage> render_prompt(const PromptTemplate& t, const PayoffMatrix& m,
                                       std::optional<int> known_rounds, const History& h);
std::vector<ChatMessage> render_prompt(const PromptTemplate& t, const PayoffMatrix& m,
                                       const Horizon& horizon, const History& h);

// A JSON object carrying an "action" field wins; otherwise the last
// standalone token among cooperate / defect / c / d (case-insensitive).
// Throws UnparseableResponse.
Action parse_action(std::string_view raw);

struct MoveResult {
  Action action = Action::C;
  std::string raw;
  int retry_count = 0;
  std::chrono::milliseconds latency{0};
  std::vector<ChatMessage> messages;  // as finally sent, including clarifications
};

inline constexpr std::string_view kClarification =
    "Your previous reply could not be read. Answer with exactly one word: cooperate or defect.";

// One chat-completions exchange with parse and clarification retries.
// Throws AgentFailure.
MoveResult request_move(const AgentEndpointConfig& cfg, std::vector<ChatMessage> messages);

// Caps concurrent HTTP requests across all agents (default 4).
void set_max_in_flight_requests(int n);

// Long-lived child process speaking the newline-delimited JSON protocol.
class SubprocessAgent {
 public:
  explicit SubprocessAgent(AgentEndpointConfig cfg);
  ~SubprocessAgent();
  SubprocessAgent(const SubprocessAgent&) = delete;
  SubprocessAgent& operator=(const SubprocessAgent&) = delete;

  // Sends one move_request and reads one move line. Restarts the process
  // after a protocol violation; throws AgentFailure once retries run out.
  MoveResult step(const History& h, const PayoffMatrix& m, std::optional<int> known_rounds);

  int restarts() const { return restarts_; }

 private:
  void start();
  void stop();
  std::optional<std::string> exchange(const std::string& line);

  AgentEndpointConfig cfg_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  int restarts_ = 0;
};

// Subprocess request line for round h.size() + 1.
Json move_request_json(const History& h, const PayoffMatrix& m, std::optional<int> known_rounds);

// Catalog player for external agents.
class AgentPlayer final : public Player {
 public:
  explicit AgentPlayer(AgentEndpointConfig cfg);
  ~AgentPlayer() override;

  void begin_match(const MatchInfo& info) override;
  Action choose(const History& h, const MatchInfo& info, GameRng& rng) override;
  std::map<std::string, std::string> metadata() const override;
  std::vector<Json> transcript() const override { return transcript_; }

  const AgentEndpointConfig& config() const { return cfg_; }

 private:
  AgentEndpointConfig cfg_;
  std::unique_ptr<SubprocessAgent> process_;
  std::vector<Json> transcript_;
};

// Renders a three-round synthetic history and requests one move.
MoveResult agent_preflight(const AgentEndpointConfig& cfg);

}  // namespace ipd

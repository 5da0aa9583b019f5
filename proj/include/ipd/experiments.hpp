// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ipd/game.hpp"
#include "ipd/metrics.hpp"
#include "ipd/strategy.hpp"

namespace ipd::experiments {

inline constexpr int kSummarySchemaVersion = 1;

struct TournamentConfig {
  std::vector<StrategySpec> players;
  PayoffMatrix matrix = PayoffMatrix::classic();
  Horizon horizon = Horizon::fixed(50);
  int seeds_per_pairing = 20;
  bool include_self_play = false;
  std::uint64_t base_seed = 0;
  int window = 5;  // trailing window for coop_series plot data
  // Execution knobs; they never change results and are left out of summaries.
  int parallelism = 1;
  int max_in_flight = 4;
};

// Strict: unknown keys and malformed values are ConfigError.
TournamentConfig tournament_config_from_json(const Json& j);
Json to_json(const TournamentConfig& c);

// Player ids are spec labels; repeated labels get "#2", "#3", ... suffixes.
std::vector<std::string> player_ids(const std::vector<StrategySpec>& specs);

// Per-match seed from the base seed, both player ids and the seed index.
std::uint64_t match_seed(std::uint64_t base_seed, const std::string& a, const std::string& b,
                         int seed_index);

struct RankingRow {
  std::string player;
  double mean_score_per_round = 0;
  Score total_score = 0;
  std::int64_t rounds = 0;
  std::int64_t matches = 0;
  std::int64_t wins = 0;
  std::int64_t ties = 0;
  std::int64_t losses = 0;
  friend bool operator==(const RankingRow&, const RankingRow&) = default;
};

// Sorted by mean score per round, then wins, then name. Self-play matches
// count for both sides. Failed matches are ignored.
std::vector<RankingRow> compute_ranking(std::span<const MatchRecord> records,
                                        const std::vector<std::string>& players);
Json to_json(const RankingRow& r);

struct Transcript {
  std::string name;  // file stem under transcripts/
  std::vector<Json> lines;
};

struct TournamentResult {
  TournamentConfig config;
  std::vector<std::string> players;
  std::vector<MatchRecord> records;  // (pair, seed) order
  std::vector<RankingRow> ranking;
  metrics::MetricsReport metrics;
  std::vector<Transcript> transcripts;  // external agents only; not reloaded
};

// Throws ConfigError, AgentFailure (unreachable agent at the preflight ping).
// Failing matches do not abort the run; they are kept as flagged records.
TournamentResult run_round_robin(const TournamentConfig& cfg);

struct SwitchCondition {
  std::string label;
  StrategySpec pre;
  StrategySpec post;
  int switch_round = 26;
};

// Coop->Defect, Defect->Coop, Coop->Competitive, Defect->Competitive, where
// the competitive strategy is tit_for_tat.
std::vector<SwitchCondition> canonical_conditions(int switch_round);

struct SwitchExperimentConfig {
  StrategySpec subject;
  std::vector<SwitchCondition> conditions;
  int rounds = 50;
  bool known_to_players = true;
  int seeds = 20;
  int window = 5;
  double epsilon = 0.1;
  std::uint64_t base_seed = 0;
  PayoffMatrix matrix = PayoffMatrix::classic();
  int parallelism = 1;
  int max_in_flight = 4;
};

// "conditions" defaults to the canonical set at "switch_round" (default
// rounds / 2 + 1).
SwitchExperimentConfig switch_config_from_json(const Json& j);
Json to_json(const SwitchExperimentConfig& c);

struct ConditionResult {
  SwitchCondition condition;
  std::string opponent_id;
  std::vector<MatchRecord> records;
  std::optional<metrics::AdaptationReport> report;
  std::string report_error;
};

struct SwitchExperimentResult {
  SwitchExperimentConfig config;
  std::string subject_id;
  std::vector<ConditionResult> conditions;
  std::vector<std::string> warnings;  // skipped conditions
  metrics::MetricsReport metrics;
  std::vector<Transcript> transcripts;

  std::vector<MatchRecord> all_records() const;
};

// Conditions naming strategies absent from the catalog are skipped with a
// warning. Throws ConfigError.
SwitchExperimentResult run_switch_battery(const SwitchExperimentConfig& cfg);

// summary.json content; byte-stable for a given config.
Json summary_json(const TournamentResult& r);
Json summary_json(const SwitchExperimentResult& r);

// Writes records.jsonl, summary.json and transcripts/*.jsonl into dir.
void persist(const TournamentResult& r, const std::filesystem::path& dir);
void persist(const SwitchExperimentResult& r, const std::filesystem::path& dir);

// Reads records and summary, recomputes derived fields and checks them
// against the stored summary. Throws IoError, SchemaVersionMismatch.
TournamentResult load_tournament(const std::filesystem::path& dir,
                                 int reader_version = kSummarySchemaVersion);
SwitchExperimentResult load_switch(const std::filesystem::path& dir,
                                   int reader_version = kSummarySchemaVersion);

// "tournament" or "switch"; IoError when the summary is absent or unreadable.
std::string result_kind(const std::filesystem::path& dir);

// Reads a JSONL record file; IoError names the failing line.
std::vector<MatchRecord> read_records(const std::filesystem::path& file,
                                      int reader_version = kRecordSchemaVersion);
void write_records(const std::vector<MatchRecord>& records, const std::filesystem::path& file);

bool equivalent(const TournamentResult& a, const TournamentResult& b);
bool equivalent(const SwitchExperimentResult& a, const SwitchExperimentResult& b);

enum class PlotKind { WinSeries, CoopSeries, Recovery, Overlay, Rankings };

std::string_view plot_kind_name(PlotKind k);
PlotKind plot_kind_from_string(std::string_view s);  // ConfigError

// Tidy CSV text. Tournament: win_series (focal player defaults to the
// first), coop_series, rankings. Switch battery: win_series, coop_series,
// recovery, overlay. Other kinds throw MissingSeries.
std::string plot_csv(const TournamentResult& r, PlotKind kind,
                     const std::optional<std::string>& focal = std::nullopt);
std::string plot_csv(const SwitchExperimentResult& r, PlotKind kind);

void emit_plot_data(const TournamentResult& r, PlotKind kind, const std::filesystem::path& path,
                    const std::optional<std::string>& focal = std::nullopt);
void emit_plot_data(const SwitchExperimentResult& r, PlotKind kind, const std::filesystem::path& path);

// Kinds a result can emit.
std::vector<PlotKind> available_plots(const TournamentResult& r);
std::vector<PlotKind> available_plots(const SwitchExperimentResult& r);

}  // namespace ipd::experiments

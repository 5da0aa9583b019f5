// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipd/game.hpp"

// Behavioral and morality metrics over MatchRecords. Records flagged as agent
// failures are skipped everywhere. A player id may occupy both sides of a
// record (self-play); both sides are then counted.
namespace ipd::metrics {

struct Ratio {
  std::int64_t numerator = 0;
  std::int64_t denominator = 0;
  // Undefined (nullopt) when the denominator is zero.
  std::optional<double> value() const;
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct BehaviorEvents {
  std::int64_t games = 0;
  std::int64_t first_moves_cooperative = 0;
  std::int64_t opponent_defections = 0;
  // Opponent defections that have a following own move (not in the final round).
  std::int64_t answerable_defections = 0;
  std::int64_t forgiven_defections = 0;
  std::int64_t retaliations = 0;
  std::int64_t own_moves = 0;
  std::int64_t own_cooperations = 0;
  // Mutual defections that have a following own move.
  std::int64_t mutual_defections = 0;
  std::int64_t mutual_defections_followed_by_own_C = 0;
  // D played on round 1 or after an opponent C. Reported, not rated.
  std::int64_t uncalled_defections = 0;
  // Games where the player cooperated at least as often as the opponent.
  std::int64_t good_partner_games = 0;
  friend bool operator==(const BehaviorEvents&, const BehaviorEvents&) = default;
};

// Throws UnknownPlayer if the player appears in none of the records.
BehaviorEvents extract_events(std::span<const MatchRecord> records, const std::string& player_id);

struct BehaviorProfile {
  Ratio cooperation_rate;
  Ratio niceness;
  Ratio forgiveness;   // forgiven / answerable opponent defections
  Ratio retaliation;   // retaliations / answerable opponent defections
  Ratio generosity;    // C after mutual defection / answerable mutual defections
  Ratio good_partner;
  friend bool operator==(const BehaviorProfile&, const BehaviorProfile&) = default;
};

BehaviorProfile behavior_profile(const BehaviorEvents& events);

// Fraction of games in which the player cooperated at least as often as its
// partner; ties count as successes.
double good_partner(std::span<const MatchRecord> records, const std::string& player_id);

class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct CooperationMatrix {
  std::vector<std::string> players;
  // entries[i][j]: fraction of i's moves that were C against j, pooled over
  // all rounds and seeds; nullopt when the pair never met.
  std::vector<std::vector<std::optional<double>>> entries;
  std::vector<std::vector<std::int64_t>> support;  // i's moves against j
  friend bool operator==(const CooperationMatrix&, const CooperationMatrix&) = default;
};

// Players ordered by first appearance unless an explicit order is given.
// Throws InsufficientData with fewer than two players.
CooperationMatrix cooperation_matrix(std::span<const MatchRecord> records,
                                     std::optional<std::vector<std::string>> players = std::nullopt);

struct EigenResult {
  std::vector<double> vector;
  double eigenvalue = 0;
  int iterations = 0;
  double residual = 0;  // final step length |v_k+1 - v_k|
};

// v <- Mv / |Mv| from the uniform start, aligned to the previous iterate,
// until |v_k+1 - v_k| <= tolerance. The result's largest-magnitude component
// is positive and the eigenvalue is the Rayleigh quotient. If Mv vanishes, v
// spans a null direction and is returned with eigenvalue 0.
// Throws NoConvergence (message carries the residual).
EigenResult power_iteration(const Matrix& m, double tolerance, int max_iter);

inline constexpr double kEigenTolerance = 1e-12;
inline constexpr int kEigenMaxIter = 10000;

// Rates with unmet pairs imputed by the row mean; diagonal 0 without self-play.
Matrix eigenjesus_matrix(const CooperationMatrix& cm);
// 2 * rate - 1 on the same imputed rates; diagonal 0 without self-play.
Matrix eigenmoses_matrix(const CooperationMatrix& cm);

EigenResult eigenjesus(const CooperationMatrix& cm, double tolerance = kEigenTolerance,
                       int max_iter = kEigenMaxIter);
EigenResult eigenmoses(const CooperationMatrix& cm, double tolerance = kEigenTolerance,
                       int max_iter = kEigenMaxIter);

struct SeriesPoint {
  int round;
  double value;
};

// Trailing-window mean of [own action == C]; early rounds use the prefix.
std::vector<SeriesPoint> cooperation_rate_series(const MatchRecord& record,
                                                 const std::string& player_id, int window);

struct CurvePoint {
  int offset;  // round - switch_round
  double value;
  std::int64_t support;  // records contributing
};

struct AdaptationReport {
  int switch_round = 0;
  int window = 0;
  double epsilon = 0;
  std::int64_t records = 0;
  double pre_rate = 0;        // rounds [k - window, k - 1]
  double post_rate = 0;       // rounds [k, end], no window
  std::int64_t post_cooperations = 0;
  std::int64_t post_moves = 0;
  double baseline_rate = 0;   // final `window` rounds
  double pre_payoff = 0;      // mean own payoff over [k - window, k - 1]
  double post_payoff = 0;     // mean own payoff per round over [k, end]
  // Post-switch rounds are counted from 1 at the switch round: the subject's
  // windowed rate must stay within epsilon of the baseline for `window`
  // consecutive rounds starting at round k + speed - 1.
  std::optional<int> adaptation_speed;  // on the seed-averaged curve
  std::vector<std::optional<int>> per_record_speed;
  std::optional<double> speed_mean;
  std::optional<double> speed_sd;
  std::vector<double> per_record_post_rate;
  std::vector<double> per_record_post_payoff;
  std::vector<CurvePoint> recovery_curve;      // seed-averaged windowed coop rate
  std::vector<CurvePoint> payoff_delta_curve;  // windowed payoff minus pre_payoff
  // Windowed coop rate divided by pre_rate; empty when pre_rate is 0.
  std::vector<CurvePoint> recovery_rate_curve;
};

// Throws MissingSwitchMetadata, InsufficientRounds, UnknownPlayer, InvalidParams.
AdaptationReport adaptation_report(std::span<const MatchRecord> records,
                                   const std::string& player_id, int window, double epsilon);

struct WinPoint {
  int round;
  double cum_wins;
  double cum_diff;
};

// Round wins (strictly higher payoff) and score differential, averaged over
// records. Throws MixedHorizons unless all records share one fixed length.
std::vector<WinPoint> win_series(std::span<const MatchRecord> records, const std::string& player_id);

struct MoralityRatings {
  std::vector<std::string> players;
  std::vector<std::optional<double>> good_partner;
  std::optional<EigenResult> eigenjesus;
  std::optional<EigenResult> eigenmoses;
  std::string eigenjesus_error;
  std::string eigenmoses_error;
};

// Everything recomputable from a record set.
struct MetricsReport {
  std::vector<std::string> players;
  std::vector<BehaviorEvents> events;
  std::vector<BehaviorProfile> profiles;
  std::optional<CooperationMatrix> cooperation;
  MoralityRatings morality;
};

MetricsReport compute_metrics(std::span<const MatchRecord> records,
                              std::optional<std::vector<std::string>> players = std::nullopt);

Json to_json(const Ratio& r);
Json to_json(const BehaviorEvents& e);
Json to_json(const BehaviorProfile& p);
Json to_json(const AdaptationReport& r);
Json to_json(const MetricsReport& r);

// One row per (player, metric, value, support); undefined values are empty.
std::string metrics_csv(const MetricsReport& r);
// Strategy, Coop. Rate, Good Partner, Forgiveness, Retaliation, Generosity in %.
std::string table_csv(const MetricsReport& r);

}  // namespace ipd::metrics

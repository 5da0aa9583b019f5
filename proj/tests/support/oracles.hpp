// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipd/game.hpp"
#include "ipd/metrics.hpp"

// Reference implementations written from the metric definitions, without
// sharing code with the library.
namespace ipd::oracle {

struct Counts {
  long games = 0, first_c = 0, opp_d = 0, answerable = 0, forgiven = 0, retaliated = 0;
  long moves = 0, coops = 0, mutual_d = 0, mutual_then_c = 0, uncalled = 0, good_games = 0;
};

// Own and opponent move strings for one side of a record.
inline std::pair<std::string, std::string> moves(const MatchRecord& r, bool as_a) {
  std::string own, opp;
  for (const auto& o : r.rounds) {
    own += to_char(as_a ? o.action_a : o.action_b);
    opp += to_char(as_a ? o.action_b : o.action_a);
  }
  return {own, opp};
}

inline void scan_side(const std::string& own, const std::string& opp, Counts& c) {
  if (own.empty()) return;
  c.games += 1;
  c.first_c += own[0] == 'C';
  c.moves += static_cast<long>(own.size());
  long own_c = 0, opp_c = 0;
  for (char x : own) own_c += x == 'C';
  for (char x : opp) opp_c += x == 'C';
  c.coops += own_c;
  c.good_games += own_c >= opp_c;
  for (char x : opp) c.opp_d += x == 'D';
  // Pairs (t, t+1): the opponent's move at t and the player's reply at t+1.
  for (std::size_t t = 0; t + 1 < own.size(); ++t) {
    if (opp[t] != 'D') continue;
    c.answerable += 1;
    if (own[t + 1] == 'C') c.forgiven += 1;
    if (own[t + 1] == 'D') c.retaliated += 1;
    if (own[t] == 'D') {
      c.mutual_d += 1;
      c.mutual_then_c += own[t + 1] == 'C';
    }
  }
  for (std::size_t t = 0; t < own.size(); ++t) {
    const bool provoked = t > 0 && opp[t - 1] == 'D';
    if (own[t] == 'D' && !provoked) c.uncalled += 1;
  }
}

inline Counts events(const std::vector<MatchRecord>& records, const std::string& id) {
  Counts c;
  for (const auto& r : records) {
    if (r.failed()) continue;
    if (r.player_a_id == id) {
      auto [own, opp] = moves(r, true);
      scan_side(own, opp, c);
    }
    if (r.player_b_id == id) {
      auto [own, opp] = moves(r, false);
      scan_side(own, opp, c);
    }
  }
  return c;
}

inline bool same(const Counts& c, const metrics::BehaviorEvents& e) {
  return c.games == e.games && c.first_c == e.first_moves_cooperative && c.opp_d == e.opponent_defections &&
         c.answerable == e.answerable_defections && c.forgiven == e.forgiven_defections &&
         c.retaliated == e.retaliations && c.moves == e.own_moves && c.coops == e.own_cooperations &&
         c.mutual_d == e.mutual_defections && c.mutual_then_c == e.mutual_defections_followed_by_own_C &&
         c.uncalled == e.uncalled_defections && c.good_games == e.good_partner_games;
}

// Pooled cooperation rates by ordered pair, missing pairs imputed with the
// mean of the row's met opponents, diagonal from self-play or zero.
inline Eigen::MatrixXd rate_matrix(const std::vector<MatchRecord>& records,
                                   const std::vector<std::string>& players) {
  const auto n = static_cast<Eigen::Index>(players.size());
  Eigen::MatrixXd coop = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
  auto idx = [&](const std::string& id) -> Eigen::Index {
    for (std::size_t i = 0; i < players.size(); ++i) {
      if (players[i] == id) return static_cast<Eigen::Index>(i);
    }
    return -1;
  };
  for (const auto& r : records) {
    if (r.failed()) continue;
    const auto a = idx(r.player_a_id);
    const auto b = idx(r.player_b_id);
    if (a < 0 || b < 0) continue;
    for (const auto& o : r.rounds) {
      coop(a, b) += o.action_a == Action::C;
      total(a, b) += 1;
      coop(b, a) += o.action_b == Action::C;
      total(b, a) += 1;
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0;
    int met = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && total(i, j) > 0) {
        sum += coop(i, j) / total(i, j);
        ++met;
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (total(i, j) > 0) {
        out(i, j) = coop(i, j) / total(i, j);
      } else if (j != i) {
        out(i, j) = met ? sum / met : 0.0;
      }
    }
  }
  return out;
}

// Affine map 2r - 1, leaving a diagonal without self-play at zero.
inline Eigen::MatrixXd moses_matrix(const std::vector<MatchRecord>& records,
                                    const std::vector<std::string>& players) {
  Eigen::MatrixXd r = rate_matrix(records, players);
  Eigen::MatrixXd out = (2.0 * r.array() - 1.0).matrix();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    bool self = false;
    for (const auto& rec : records) {
      self = self || (rec.player_a_id == players[static_cast<std::size_t>(i)] &&
                      rec.player_b_id == players[static_cast<std::size_t>(i)] && !rec.rounds.empty());
    }
    if (!self) out(i, i) = 0.0;
  }
  return out;
}

struct Eigenpair {
  Eigen::VectorXd vector;
  double value = 0;
  double gap = 0;  // |lambda_1| - |lambda_2|
};

inline void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  v.cwiseAbs().maxCoeff(&best);
  if (v(best) < 0) v = -v;
}

// Dominant (largest-magnitude, real) eigenpair by dense decomposition.
inline std::optional<Eigenpair> dominant(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) return std::nullopt;
  const auto& vals = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < vals.size(); ++i) {
    if (std::abs(vals(i)) > std::abs(vals(best))) best = i;
  }
  if (std::abs(vals(best).imag()) > 1e-12) return std::nullopt;
  double second = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (i != best) second = std::max(second, std::abs(vals(i)));
  }
  Eigenpair p;
  p.vector = es.eigenvectors().col(best).real();
  p.vector.normalize();
  fix_sign(p.vector);
  p.value = vals(best).real();
  p.gap = std::abs(vals(best)) - second;
  return p;
}

inline std::optional<Eigenpair> dominant_symmetric(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) return std::nullopt;
  const auto& vals = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < vals.size(); ++i) {
    if (std::abs(vals(i)) > std::abs(vals(best))) best = i;
  }
  double second = 0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (i != best) second = std::max(second, std::abs(vals(i)));
  }
  Eigenpair p;
  p.vector = es.eigenvectors().col(best);
  fix_sign(p.vector);
  p.value = vals(best);
  p.gap = std::abs(vals(best)) - second;
  return p;
}

inline metrics::Matrix to_matrix(const Eigen::MatrixXd& m) {
  metrics::Matrix out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
  }
  return out;
}

inline double max_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b(static_cast<Eigen::Index>(i))));
  return d;
}

// Record with the given move strings; payoffs from the classic matrix.
inline MatchRecord scripted(const std::string& a, const std::string& b, const std::string& ida = "a",
                            const std::string& idb = "b") {
  MatchRecord r;
  r.player_a_id = ida;
  r.player_b_id = idb;
  r.horizon = Horizon::fixed(static_cast<int>(a.size()));
  const auto m = PayoffMatrix::classic();
  for (std::size_t t = 0; t < a.size(); ++t) {
    RoundOutcome o;
    o.round_index = static_cast<int>(t + 1);
    o.action_a = a[t] == 'C' ? Action::C : Action::D;
    o.action_b = b[t] == 'C' ? Action::C : Action::D;
    std::tie(o.payoff_a, o.payoff_b) = payoff(m, o.action_a, o.action_b);
    r.total_a += o.payoff_a;
    r.total_b += o.payoff_b;
    r.rounds.push_back(o);
  }
  return r;
}

}  // namespace ipd::oracle

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>

#include "ipd/error.hpp"
#include "ipd/metrics.hpp"
#include "metrics_internal.hpp"

namespace ipd::metrics {

std::optional<double> Ratio::value() const {
  if (denominator <= 0) return std::nullopt;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::vector<bool> sides_of(const MatchRecord& r, const std::string& player_id) {
  std::vector<bool> sides;
  if (r.player_a_id == player_id) sides.push_back(true);
  if (r.player_b_id == player_id) sides.push_back(false);
  return sides;
}

namespace {

void scan(const MatchRecord& r, bool as_a, BehaviorEvents& e) {
  const auto& rounds = r.rounds;
  if (rounds.empty()) return;
  const auto own = [&](std::size_t t) { return as_a ? rounds[t].action_a : rounds[t].action_b; };
  const auto opp = [&](std::size_t t) { return as_a ? rounds[t].action_b : rounds[t].action_a; };
  const std::size_t n = rounds.size();

  ++e.games;
  if (own(0) == Action::C) ++e.first_moves_cooperative;
  std::int64_t own_c = 0;
  std::int64_t opp_c = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const bool last = t + 1 == n;
    ++e.own_moves;
    if (own(t) == Action::C) ++own_c;
    if (opp(t) == Action::C) ++opp_c;
    if (opp(t) == Action::D) {
      ++e.opponent_defections;
      if (!last) {
        ++e.answerable_defections;
        if (own(t + 1) == Action::C) {
          ++e.forgiven_defections;
        } else {
          ++e.retaliations;
        }
        if (own(t) == Action::D) {
          ++e.mutual_defections;
          if (own(t + 1) == Action::C) ++e.mutual_defections_followed_by_own_C;
        }
      }
    }
    if (own(t) == Action::D && (t == 0 || opp(t - 1) == Action::C)) ++e.uncalled_defections;
  }
  e.own_cooperations += own_c;
  if (own_c >= opp_c) ++e.good_partner_games;
}

}  // namespace

BehaviorEvents extract_events(std::span<const MatchRecord> records, const std::string& player_id) {
  BehaviorEvents e;
  bool seen = false;
  for (const auto& r : records) {
    if (r.failed()) continue;
    for (bool as_a : sides_of(r, player_id)) {
      seen = true;
      scan(r, as_a, e);
    }
  }
  if (!seen) fail(ErrorCode::UnknownPlayer, "player '" + player_id + "' appears in no record");
  return e;
}

BehaviorProfile behavior_profile(const BehaviorEvents& e) {
  BehaviorProfile p;
  p.cooperation_rate = {e.own_cooperations, e.own_moves};
  p.niceness = {e.first_moves_cooperative, e.games};
  p.forgiveness = {e.forgiven_defections, e.answerable_defections};
  p.retaliation = {e.retaliations, e.answerable_defections};
  p.generosity = {e.mutual_defections_followed_by_own_C, e.mutual_defections};
  p.good_partner = {e.good_partner_games, e.games};
  return p;
}

double good_partner(std::span<const MatchRecord> records, const std::string& player_id) {
  const auto e = extract_events(records, player_id);
  if (e.games == 0) fail(ErrorCode::InsufficientData, "no games for '" + player_id + "'");
  return static_cast<double>(e.good_partner_games) / static_cast<double>(e.games);
}

CooperationMatrix cooperation_matrix(std::span<const MatchRecord> records,
                                     std::optional<std::vector<std::string>> players) {
  CooperationMatrix cm;
  if (players) {
    cm.players = std::move(*players);
  } else {
    for (const auto& r : records) {
      if (r.failed()) continue;
      for (const auto* id : {&r.player_a_id, &r.player_b_id}) {
        if (std::find(cm.players.begin(), cm.players.end(), *id) == cm.players.end()) {
          cm.players.push_back(*id);
        }
      }
    }
  }
  const std::size_t m = cm.players.size();
  if (m < 2) fail(ErrorCode::InsufficientData, "a cooperation matrix needs at least two players");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < m; ++i) index.emplace(cm.players[i], i);
  std::vector<std::vector<std::int64_t>> coops(m, std::vector<std::int64_t>(m, 0));
  cm.support.assign(m, std::vector<std::int64_t>(m, 0));

  for (const auto& r : records) {
    if (r.failed()) continue;
    auto ia = index.find(r.player_a_id);
    auto ib = index.find(r.player_b_id);
    if (ia == index.end() || ib == index.end()) continue;
    const std::size_t a = ia->second;
    const std::size_t b = ib->second;
    for (const auto& o : r.rounds) {
      ++cm.support[a][b];
      ++cm.support[b][a];
      if (o.action_a == Action::C) ++coops[a][b];
      if (o.action_b == Action::C) ++coops[b][a];
    }
  }

  cm.entries.assign(m, std::vector<std::optional<double>>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (cm.support[i][j] > 0) {
        cm.entries[i][j] = static_cast<double>(coops[i][j]) / static_cast<double>(cm.support[i][j]);
      }
    }
  }
  return cm;
}

}  // namespace ipd::metrics

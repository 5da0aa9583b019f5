// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <algorithm>
#include <fstream>

#include "experiments_internal.hpp"
#include "ipd/error.hpp"

namespace ipd::experiments {

namespace {

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool involves(const MatchRecord& r, const std::string& x, const std::string& y) {
  return (r.player_a_id == x && r.player_b_id == y) || (r.player_a_id == y && r.player_b_id == x);
}

std::vector<MatchRecord> between(std::span<const MatchRecord> records, const std::string& x,
                                 const std::string& y) {
  std::vector<MatchRecord> out;
  for (const auto& r : records) {
    if (!r.failed() && involves(r, x, y)) out.push_back(r);
  }
  return out;
}

void win_rows(std::string& out, std::span<const MatchRecord> records, const std::string& focal,
              const std::string& label) {
  for (const auto& p : metrics::win_series(records, focal)) {
    out += fmt::format("{},{},{},{}\n", field(label), p.round, p.cum_wins, p.cum_diff);
  }
}

// Seed-averaged trailing-window cooperation of `player`, by round.
void coop_rows(std::string& out, std::span<const MatchRecord> records, const std::string& player,
               const std::string& label, int window) {
  std::vector<double> sum;
  std::vector<int> count;
  for (const auto& r : records) {
    const int sides = (r.player_a_id == player) + (r.player_b_id == player);
    for (int s = 0; s < sides; ++s) {
      MatchRecord view = r;
      if (s == 1) {  // self-play: read side b through a mirrored copy
        for (auto& o : view.rounds) {
          std::swap(o.action_a, o.action_b);
          std::swap(o.payoff_a, o.payoff_b);
        }
      }
      const auto series = metrics::cooperation_rate_series(view, player, window);
      if (series.size() > sum.size()) {
        sum.resize(series.size(), 0.0);
        count.resize(series.size(), 0);
      }
      for (std::size_t t = 0; t < series.size(); ++t) {
        sum[t] += series[t].value;
        ++count[t];
      }
    }
  }
  for (std::size_t t = 0; t < sum.size(); ++t) {
    out += fmt::format("{},{},{},{}\n", field(player), field(label), t + 1, sum[t] / count[t]);
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

std::string_view plot_kind_name(PlotKind k) {
  switch (k) {
    case PlotKind::WinSeries: return "win_series";
    case PlotKind::CoopSeries: return "coop_series";
    case PlotKind::Recovery: return "recovery";
    case PlotKind::Overlay: return "overlay";
    case PlotKind::Rankings: return "rankings";
  }
  return "unknown";
}

PlotKind plot_kind_from_string(std::string_view s) {
  for (auto k : {PlotKind::WinSeries, PlotKind::CoopSeries, PlotKind::Recovery, PlotKind::Overlay,
                 PlotKind::Rankings}) {
    if (plot_kind_name(k) == s) return k;
  }
  fail(ErrorCode::ConfigError, "unknown plot kind \"" + std::string(s) + "\"");
}

std::string plot_csv(const TournamentResult& r, PlotKind kind, const std::optional<std::string>& focal) {
  switch (kind) {
    case PlotKind::WinSeries: {
      const std::string player = focal.value_or(r.players.front());
      if (std::find(r.players.begin(), r.players.end(), player) == r.players.end()) {
        fail(ErrorCode::UnknownPlayer, "no player '" + player + "' in this tournament");
      }
      std::string out = "opponent,round,cum_wins,cum_diff\n";
      for (const auto& opp : r.players) {
        auto recs = between(r.records, player, opp);
        if (!recs.empty()) win_rows(out, recs, player, opp);
      }
      return out;
    }
    case PlotKind::CoopSeries: {
      std::string out = "player,opponent,round,coop_rate\n";
      for (const auto& p : r.players) {
        for (const auto& q : r.players) {
          auto recs = between(r.records, p, q);
          if (!recs.empty()) coop_rows(out, recs, p, q, r.config.window);
        }
      }
      return out;
    }
    case PlotKind::Rankings: {
      std::string out = "rank,player,mean_score_per_round,total_score,matches,wins,ties,losses\n";
      int rank = 0;
      for (const auto& row : r.ranking) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", ++rank, field(row.player), row.mean_score_per_round,
                           row.total_score, row.matches, row.wins, row.ties, row.losses);
      }
      return out;
    }
    case PlotKind::Recovery:
    case PlotKind::Overlay:
      break;
  }
  fail(ErrorCode::MissingSeries,
       "a tournament result has no " + std::string(plot_kind_name(kind)) + " series");
}

std::string plot_csv(const SwitchExperimentResult& r, PlotKind kind) {
  bool any_report = false;
  for (const auto& c : r.conditions) any_report = any_report || c.report.has_value();
  switch (kind) {
    case PlotKind::WinSeries: {
      std::string out = "opponent,round,cum_wins,cum_diff\n";
      for (const auto& c : r.conditions) {
        std::vector<MatchRecord> ok;
        for (const auto& rec : c.records) {
          if (!rec.failed()) ok.push_back(rec);
        }
        if (!ok.empty()) win_rows(out, ok, r.subject_id, c.condition.label);
      }
      return out;
    }
    case PlotKind::CoopSeries: {
      std::string out = "player,opponent,round,coop_rate\n";
      for (const auto& c : r.conditions) {
        std::vector<MatchRecord> ok;
        for (const auto& rec : c.records) {
          if (!rec.failed()) ok.push_back(rec);
        }
        if (!ok.empty()) coop_rows(out, ok, r.subject_id, c.condition.label, r.config.window);
      }
      return out;
    }
    case PlotKind::Recovery: {
      if (!any_report) break;
      std::string out = "condition,offset,coop_rate,recovery_rate\n";
      for (const auto& c : r.conditions) {
        if (!c.report) continue;
        const auto& rep = *c.report;
        for (std::size_t i = 0; i < rep.recovery_curve.size(); ++i) {
          const auto& p = rep.recovery_curve[i];
          const std::string rate =
              rep.recovery_rate_curve.empty() ? "" : fmt::format("{}", rep.recovery_rate_curve[i].value);
          out += fmt::format("{},{},{},{}\n", field(c.condition.label), p.offset, p.value, rate);
        }
      }
      return out;
    }
    case PlotKind::Overlay: {
      if (!any_report) break;
      std::string out = "condition,measure,offset,value\n";
      for (const auto& c : r.conditions) {
        if (!c.report) continue;
        const auto& rep = *c.report;
        for (const auto& p : rep.recovery_curve) {
          out += fmt::format("{},coop_rate_change_pct,{},{}\n", field(c.condition.label), p.offset,
                             (p.value - rep.pre_rate) * 100.0);
        }
        for (const auto& p : rep.payoff_delta_curve) {
          out += fmt::format("{},payoff_change,{},{}\n", field(c.condition.label), p.offset, p.value);
        }
      }
      return out;
    }
    case PlotKind::Rankings:
      break;
  }
  fail(ErrorCode::MissingSeries,
       "this switch result has no " + std::string(plot_kind_name(kind)) + " series");
}

void emit_plot_data(const TournamentResult& r, PlotKind kind, const std::filesystem::path& path,
                    const std::optional<std::string>& focal) {
  write_file(path, plot_csv(r, kind, focal));
}

void emit_plot_data(const SwitchExperimentResult& r, PlotKind kind, const std::filesystem::path& path) {
  write_file(path, plot_csv(r, kind));
}

std::vector<PlotKind> available_plots(const TournamentResult& r) {
  std::vector<PlotKind> out{PlotKind::CoopSeries, PlotKind::Rankings};
  if (r.config.horizon.is_fixed()) out.insert(out.begin(), PlotKind::WinSeries);
  return out;
}

std::vector<PlotKind> available_plots(const SwitchExperimentResult& r) {
  std::vector<PlotKind> out{PlotKind::WinSeries, PlotKind::CoopSeries};
  for (const auto& c : r.conditions) {
    if (c.report) {
      out.push_back(PlotKind::Recovery);
      out.push_back(PlotKind::Overlay);
      break;
    }
  }
  return out;
}

}  // namespace ipd::experiments

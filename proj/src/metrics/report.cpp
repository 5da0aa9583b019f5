// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <algorithm>

#include "ipd/error.hpp"
#include "ipd/metrics.hpp"

namespace ipd::metrics {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

std::string percent(const Ratio& r) {
  auto v = r.value();
  return v ? fmt::format("{:.1f}", *v * 100.0) : "";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Json curve_json(const std::vector<CurvePoint>& curve) {
  Json out = Json::array();
  for (const auto& p : curve) out.push_back({{"offset", p.offset}, {"value", p.value}, {"support", p.support}});
  return out;
}

Json eigen_json(const MoralityRatings& m, const std::optional<EigenResult>& r, const std::string& error) {
  if (!r) return Json{{"error", error}};
  Json ratings = Json::object();
  for (std::size_t i = 0; i < m.players.size(); ++i) ratings[m.players[i]] = r->vector[i];
  return Json{{"ratings", std::move(ratings)},
              {"eigenvalue", r->eigenvalue},
              {"iterations", r->iterations},
              {"residual", r->residual}};
}

}  // namespace

MetricsReport compute_metrics(std::span<const MatchRecord> records,
                              std::optional<std::vector<std::string>> players) {
  MetricsReport rep;
  if (players) {
    rep.players = std::move(*players);
  } else {
    for (const auto& r : records) {
      if (r.failed()) continue;
      for (const auto* id : {&r.player_a_id, &r.player_b_id}) {
        if (std::find(rep.players.begin(), rep.players.end(), *id) == rep.players.end()) {
          rep.players.push_back(*id);
        }
      }
    }
  }
  if (rep.players.empty()) fail(ErrorCode::InsufficientData, "no usable records");

  for (const auto& id : rep.players) {
    BehaviorEvents e;
    try {
      e = extract_events(records, id);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::UnknownPlayer) throw;
    }
    rep.events.push_back(e);
    rep.profiles.push_back(behavior_profile(e));
  }

  rep.morality.players = rep.players;
  for (const auto& p : rep.profiles) rep.morality.good_partner.push_back(p.good_partner.value());
  if (rep.players.size() >= 2) {
    rep.cooperation = cooperation_matrix(records, rep.players);
    try {
      rep.morality.eigenjesus = eigenjesus(*rep.cooperation);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NoConvergence) throw;
      rep.morality.eigenjesus_error = err.what();
    }
    try {
      rep.morality.eigenmoses = eigenmoses(*rep.cooperation);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NoConvergence) throw;
      rep.morality.eigenmoses_error = err.what();
    }
  } else {
    rep.morality.eigenjesus_error = rep.morality.eigenmoses_error = "fewer than two players";
  }
  return rep;
}

Json to_json(const Ratio& r) {
  return Json{{"value", optional_number(r.value())},
              {"numerator", r.numerator},
              {"denominator", r.denominator}};
}

Json to_json(const BehaviorEvents& e) {
  return Json{{"games", e.games},
              {"first_moves_cooperative", e.first_moves_cooperative},
              {"opponent_defections", e.opponent_defections},
              {"answerable_defections", e.answerable_defections},
              {"forgiven_defections", e.forgiven_defections},
              {"retaliations", e.retaliations},
              {"own_moves", e.own_moves},
              {"own_cooperations", e.own_cooperations},
              {"mutual_defections", e.mutual_defections},
              {"mutual_defections_followed_by_own_C", e.mutual_defections_followed_by_own_C},
              {"uncalled_defections", e.uncalled_defections},
              {"good_partner_games", e.good_partner_games}};
}

Json to_json(const BehaviorProfile& p) {
  return Json{{"cooperation_rate", to_json(p.cooperation_rate)},
              {"niceness", to_json(p.niceness)},
              {"forgiveness", to_json(p.forgiveness)},
              {"retaliation", to_json(p.retaliation)},
              {"generosity", to_json(p.generosity)},
              {"good_partner", to_json(p.good_partner)}};
}

Json to_json(const AdaptationReport& r) {
  Json speeds = Json::array();
  for (const auto& s : r.per_record_speed) speeds.push_back(s ? Json(*s) : Json(nullptr));
  return Json{{"switch_round", r.switch_round},
              {"window", r.window},
              {"epsilon", r.epsilon},
              {"records", r.records},
              {"pre_rate", r.pre_rate},
              {"post_rate", r.post_rate},
              {"post_cooperations", r.post_cooperations},
              {"post_moves", r.post_moves},
              {"baseline_rate", r.baseline_rate},
              {"pre_payoff", r.pre_payoff},
              {"post_payoff", r.post_payoff},
              {"adaptation_speed", r.adaptation_speed ? Json(*r.adaptation_speed) : Json(nullptr)},
              {"per_record_speed", std::move(speeds)},
              {"speed_mean", optional_number(r.speed_mean)},
              {"speed_sd", optional_number(r.speed_sd)},
              {"per_record_post_rate", r.per_record_post_rate},
              {"per_record_post_payoff", r.per_record_post_payoff},
              {"recovery_curve", curve_json(r.recovery_curve)},
              {"payoff_delta_curve", curve_json(r.payoff_delta_curve)},
              {"recovery_rate_curve", curve_json(r.recovery_rate_curve)}};
}

Json to_json(const MetricsReport& r) {
  Json behavior = Json::object();
  for (std::size_t i = 0; i < r.players.size(); ++i) {
    behavior[r.players[i]] = {{"events", to_json(r.events[i])}, {"profile", to_json(r.profiles[i])}};
  }
  Json matrix = nullptr;
  if (r.cooperation) {
    Json entries = Json::array();
    for (const auto& row : r.cooperation->entries) {
      Json jr = Json::array();
      for (const auto& e : row) jr.push_back(optional_number(e));
      entries.push_back(std::move(jr));
    }
    matrix = {{"players", r.cooperation->players},
              {"entries", std::move(entries)},
              {"support", r.cooperation->support}};
  }
  Json good = Json::object();
  for (std::size_t i = 0; i < r.players.size(); ++i) {
    good[r.players[i]] = optional_number(r.morality.good_partner[i]);
  }
  return Json{{"players", r.players},
              {"behavior", std::move(behavior)},
              {"cooperation_matrix", std::move(matrix)},
              {"morality",
               {{"good_partner", std::move(good)},
                {"eigenjesus", eigen_json(r.morality, r.morality.eigenjesus, r.morality.eigenjesus_error)},
                {"eigenmoses", eigen_json(r.morality, r.morality.eigenmoses, r.morality.eigenmoses_error)}}}};
}

std::string metrics_csv(const MetricsReport& r) {
  std::string out = "player,metric,value,support\n";
  const auto row = [&](const std::string& player, const std::string& metric, const std::string& value,
                       std::int64_t support) {
    out += fmt::format("{},{},{},{}\n", csv_field(player), metric, value, support);
  };
  for (std::size_t i = 0; i < r.players.size(); ++i) {
    const auto& id = r.players[i];
    const auto& p = r.profiles[i];
    const auto& e = r.events[i];
    row(id, "cooperation_rate", csv_number(p.cooperation_rate.value()), p.cooperation_rate.denominator);
    row(id, "niceness", csv_number(p.niceness.value()), p.niceness.denominator);
    row(id, "forgiveness", csv_number(p.forgiveness.value()), p.forgiveness.denominator);
    row(id, "retaliation", csv_number(p.retaliation.value()), p.retaliation.denominator);
    row(id, "generosity", csv_number(p.generosity.value()), p.generosity.denominator);
    row(id, "good_partner", csv_number(p.good_partner.value()), p.good_partner.denominator);
    row(id, "uncalled_defections", std::to_string(e.uncalled_defections), e.own_moves);
    if (r.morality.eigenjesus) {
      row(id, "eigenjesus", csv_number(r.morality.eigenjesus->vector[i]), r.morality.eigenjesus->iterations);
    }
    if (r.morality.eigenmoses) {
      row(id, "eigenmoses", csv_number(r.morality.eigenmoses->vector[i]), r.morality.eigenmoses->iterations);
    }
  }
  for (const auto& [name, res] : {std::pair{"eigenjesus", &r.morality.eigenjesus},
                                  std::pair{"eigenmoses", &r.morality.eigenmoses}}) {
    if (!*res) continue;
    row("*", std::string(name) + "_eigenvalue", csv_number((*res)->eigenvalue), (*res)->iterations);
    row("*", std::string(name) + "_residual", csv_number((*res)->residual), (*res)->iterations);
  }
  return out;
}

std::string table_csv(const MetricsReport& r) {
  std::string out = "Strategy,Coop. Rate,Good Partner,Forgiveness,Retaliation,Generosity\n";
  for (std::size_t i = 0; i < r.players.size(); ++i) {
    const auto& p = r.profiles[i];
    out += fmt::format("{},{},{},{},{},{}\n", csv_field(r.players[i]), percent(p.cooperation_rate),
                       percent(p.good_partner), percent(p.forgiveness), percent(p.retaliation),
                       percent(p.generosity));
  }
  return out;
}

}  // namespace ipd::metrics

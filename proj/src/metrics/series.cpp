// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>

#include "ipd/error.hpp"
#include "ipd/metrics.hpp"
#include "metrics_internal.hpp"

namespace ipd::metrics {

namespace {

constexpr double kSlack = 1e-12;

// 1-based prefix sums of the player's cooperation indicator and payoff.
struct Track {
  int n = 0;
  std::vector<double> coop;  // coop[t] = sum over rounds 1..t
  std::vector<double> pay;

  Track(const MatchRecord& r, bool as_a) : n(static_cast<int>(r.rounds.size())) {
    coop.assign(n + 1, 0.0);
    pay.assign(n + 1, 0.0);
    for (int t = 1; t <= n; ++t) {
      const auto& o = r.rounds[t - 1];
      const Action own = as_a ? o.action_a : o.action_b;
      coop[t] = coop[t - 1] + (own == Action::C ? 1.0 : 0.0);
      pay[t] = pay[t - 1] + (as_a ? o.payoff_a : o.payoff_b);
    }
  }

  double coop_sum(int from, int to) const { return coop[to] - coop[from - 1]; }
  double pay_sum(int from, int to) const { return pay[to] - pay[from - 1]; }
  double trailing_coop(int t, int w) const {
    const int from = std::max(1, t - w + 1);
    return coop_sum(from, t) / (t - from + 1);
  }
  double trailing_pay(int t, int w) const {
    const int from = std::max(1, t - w + 1);
    return pay_sum(from, t) / (t - from + 1);
  }
};

bool side_for(const MatchRecord& r, const std::string& player_id) {
  auto sides = sides_of(r, player_id);
  if (sides.empty()) {
    fail(ErrorCode::UnknownPlayer, "player '" + player_id + "' is not in record " +
                                       r.player_a_id + " vs " + r.player_b_id);
  }
  return sides.front();
}

// Smallest t >= 1 such that rate(offset) is within epsilon of baseline for
// offsets t-1 .. t+window-2, all of which must be <= last_offset.
std::optional<int> speed_of(const std::function<double(int)>& rate, int last_offset, int window,
                            double baseline, double epsilon) {
  for (int t = 1; t + window - 2 <= last_offset; ++t) {
    bool held = true;
    for (int o = t - 1; o <= t + window - 2; ++o) {
      if (std::abs(rate(o) - baseline) > epsilon + kSlack) {
        held = false;
        break;
      }
    }
    if (held) return t;
  }
  return std::nullopt;
}

}  // namespace

std::vector<SeriesPoint> cooperation_rate_series(const MatchRecord& record,
                                                 const std::string& player_id, int window) {
  if (window < 1) fail(ErrorCode::InvalidParams, "window must be >= 1");
  Track track(record, side_for(record, player_id));
  std::vector<SeriesPoint> out;
  out.reserve(track.n);
  for (int t = 1; t <= track.n; ++t) out.push_back({t, track.trailing_coop(t, window)});
  return out;
}

AdaptationReport adaptation_report(std::span<const MatchRecord> records,
                                   const std::string& player_id, int window, double epsilon) {
  if (window < 1) fail(ErrorCode::InvalidParams, "window must be >= 1");
  if (!(epsilon > 0 && epsilon < 1)) fail(ErrorCode::InvalidParams, "epsilon must lie in (0, 1)");

  std::vector<Track> tracks;
  std::optional<int> k;
  for (const auto& r : records) {
    if (r.failed()) continue;
    auto it = r.metadata.find("switch_round");
    if (it == r.metadata.end()) {
      fail(ErrorCode::MissingSwitchMetadata,
           "record " + r.player_a_id + " vs " + r.player_b_id + " has no switch_round");
    }
    int rk = 0;
    try {
      rk = std::stoi(it->second);
    } catch (const std::exception&) {
      fail(ErrorCode::MissingSwitchMetadata, "switch_round is not an integer: " + it->second);
    }
    if (k && *k != rk) {
      fail(ErrorCode::MissingSwitchMetadata, "records disagree on switch_round (" +
                                                 std::to_string(*k) + " vs " + std::to_string(rk) + ")");
    }
    k = rk;
    tracks.emplace_back(r, side_for(r, player_id));
  }
  if (tracks.empty()) fail(ErrorCode::InsufficientData, "no usable records");

  const int K = *k;
  const int w = window;
  if (K - w < 1) {
    fail(ErrorCode::InsufficientRounds, "switch round " + std::to_string(K) +
                                            " leaves no full pre-switch window of " + std::to_string(w));
  }
  int min_n = tracks.front().n;
  int max_n = tracks.front().n;
  for (const auto& tr : tracks) {
    min_n = std::min(min_n, tr.n);
    max_n = std::max(max_n, tr.n);
  }
  if (K + w - 1 > min_n) {
    fail(ErrorCode::InsufficientRounds, "a record of " + std::to_string(min_n) +
                                            " rounds is too short for switch round " +
                                            std::to_string(K) + " and window " + std::to_string(w));
  }

  AdaptationReport rep;
  rep.switch_round = K;
  rep.window = w;
  rep.epsilon = epsilon;
  rep.records = static_cast<std::int64_t>(tracks.size());
  const double count = static_cast<double>(tracks.size());

  double pre_c = 0;
  double pre_p = 0;
  double post_c = 0;
  double post_p = 0;
  double base = 0;
  std::int64_t post_moves = 0;
  std::vector<double> baselines;
  for (const auto& tr : tracks) {
    pre_c += tr.coop_sum(K - w, K - 1);
    pre_p += tr.pay_sum(K - w, K - 1);
    post_c += tr.coop_sum(K, tr.n);
    post_p += tr.pay_sum(K, tr.n);
    post_moves += tr.n - K + 1;
    const double b = tr.coop_sum(tr.n - w + 1, tr.n);
    base += b;
    baselines.push_back(b / w);
    rep.per_record_post_rate.push_back(tr.coop_sum(K, tr.n) / (tr.n - K + 1));
    rep.per_record_post_payoff.push_back(tr.pay_sum(K, tr.n) / (tr.n - K + 1));
  }
  rep.pre_rate = pre_c / (w * count);
  rep.pre_payoff = pre_p / (w * count);
  rep.post_cooperations = static_cast<std::int64_t>(std::llround(post_c));
  rep.post_moves = post_moves;
  rep.post_rate = post_c / static_cast<double>(post_moves);
  rep.post_payoff = post_p / static_cast<double>(post_moves);
  rep.baseline_rate = base / (w * count);

  for (int o = -w; o <= max_n - K; ++o) {
    const int t = K + o;
    double coop = 0;
    double pay = 0;
    std::int64_t support = 0;
    for (const auto& tr : tracks) {
      if (t > tr.n) continue;
      coop += tr.trailing_coop(t, w);
      pay += tr.trailing_pay(t, w);
      ++support;
    }
    const double c = coop / static_cast<double>(support);
    rep.recovery_curve.push_back({o, c, support});
    rep.payoff_delta_curve.push_back({o, pay / static_cast<double>(support) - rep.pre_payoff, support});
    if (rep.pre_rate > 0) rep.recovery_rate_curve.push_back({o, c / rep.pre_rate, support});
  }

  const auto curve_at = [&](int o) { return rep.recovery_curve[static_cast<std::size_t>(o + w)].value; };
  rep.adaptation_speed = speed_of(curve_at, min_n - K, w, rep.baseline_rate, epsilon);

  std::vector<double> defined;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& tr = tracks[i];
    auto s = speed_of([&](int o) { return tr.trailing_coop(K + o, w); }, tr.n - K, w, baselines[i],
                      epsilon);
    rep.per_record_speed.push_back(s);
    if (s) defined.push_back(*s);
  }
  if (!defined.empty()) {
    double mean = 0;
    for (double s : defined) mean += s;
    mean /= static_cast<double>(defined.size());
    double var = 0;
    for (double s : defined) var += (s - mean) * (s - mean);
    rep.speed_mean = mean;
    rep.speed_sd = defined.size() > 1 ? std::sqrt(var / static_cast<double>(defined.size() - 1)) : 0.0;
  }
  return rep;
}

std::vector<WinPoint> win_series(std::span<const MatchRecord> records, const std::string& player_id) {
  std::optional<int> length;
  std::vector<std::pair<const MatchRecord*, bool>> views;
  bool seen = false;
  for (const auto& r : records) {
    if (r.failed()) continue;
    const auto* fixed = r.horizon.as_fixed();
    const int n = static_cast<int>(r.rounds.size());
    if (!fixed || fixed->rounds != n || (length && *length != n)) {
      fail(ErrorCode::MixedHorizons, "win series needs records sharing one fixed horizon");
    }
    length = n;
    for (bool as_a : sides_of(r, player_id)) {
      seen = true;
      views.emplace_back(&r, as_a);
    }
  }
  if (!length) fail(ErrorCode::InsufficientData, "no usable records");
  if (!seen) fail(ErrorCode::UnknownPlayer, "player '" + player_id + "' appears in no record");

  std::vector<WinPoint> out;
  out.reserve(*length);
  std::vector<double> wins(views.size(), 0.0);
  std::vector<double> diff(views.size(), 0.0);
  for (int t = 0; t < *length; ++t) {
    double w_sum = 0;
    double d_sum = 0;
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto& o = views[i].first->rounds[t];
      const double own = views[i].second ? o.payoff_a : o.payoff_b;
      const double opp = views[i].second ? o.payoff_b : o.payoff_a;
      if (own > opp) wins[i] += 1;
      diff[i] += own - opp;
      w_sum += wins[i];
      d_sum += diff[i];
    }
    const double n = static_cast<double>(views.size());
    out.push_back({t + 1, w_sum / n, d_sum / n});
  }
  return out;
}

}  // namespace ipd::metrics

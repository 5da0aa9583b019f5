// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "ipd/error.hpp"
#include "ipd/strategy.hpp"

namespace ipd::strategies {

namespace {

double coop(bool c) { return c ? 1.0 : 0.0; }

class Constant final : public Strategy {
 public:
  explicit Constant(double p) : p_(p) {}

 protected:
  double next_probability(const History&) override { return p_; }

 private:
  double p_;
};

class Grim final : public Strategy {
 protected:
  void observe(const HistoryEntry& e, std::size_t) override {
    if (e.opp == Action::D) triggered_ = true;
  }
  void reset() override { triggered_ = false; }
  double next_probability(const History&) override { return coop(!triggered_); }

 private:
  bool triggered_ = false;
};

class TitForTat final : public Strategy {
 public:
  explicit TitForTat(Action opening) : opening_(opening) {}

 protected:
  double next_probability(const History& h) override {
    if (h.empty()) return coop(opening_ == Action::C);
    return coop(h.back().opp == Action::C);
  }

 private:
  Action opening_;
};

// Copies the opponent's move from two rounds back; cooperates on rounds 1-2.
class TwoStepCopy final : public Strategy {
 protected:
  double next_probability(const History& h) override {
    if (h.size() < 2) return 1.0;
    return coop(h[h.size() - 2].opp == Action::C);
  }
};

class GenerousTitForTat final : public Strategy {
 public:
  explicit GenerousTitForTat(double defect_probability) : p_(defect_probability) {}

 protected:
  double next_probability(const History& h) override {
    if (h.empty() || h.back().opp == Action::C) return 1.0;
    return 1.0 - p_;
  }

 private:
  double p_;
};

// Pavlov: keep the last action after earning R or H (opponent cooperated),
// switch after P or L.
class WinStayLoseShift final : public Strategy {
 protected:
  double next_probability(const History& h) override {
    if (h.empty()) return 1.0;
    const auto& last = h.back();
    Action next = last.opp == Action::C ? last.self : flip(last.self);
    return coop(next == Action::C);
  }
};

// Memory-one with (CC, CD, DC, DD) -> (p, 0, 1, 0) over (own, opponent).
class Joss final : public Strategy {
 public:
  explicit Joss(double p) : p_(p) {}

 protected:
  double next_probability(const History& h) override {
    if (h.empty()) return 1.0;
    const auto& last = h.back();
    if (last.opp == Action::D) return 0.0;
    return last.self == Action::C ? p_ : 1.0;
  }

 private:
  double p_;
};

class Grofman final : public Strategy {
 protected:
  double next_probability(const History& h) override {
    if (h.empty() || h.back().self == h.back().opp) return 1.0;
    return 2.0 / 7.0;
  }
};

// Retaliates for one more round after each fresh opponent defection.
class Shubik final : public Strategy {
 protected:
  void observe(const HistoryEntry& e, std::size_t) override {
    if (e.opp == Action::D) {
      if (e.self == Action::C) {
        retaliating_ = true;
        ++length_;
        remaining_ = length_;
        decrease();
      } else if (retaliating_) {
        decrease();
      }
      next_ = Action::D;
    } else if (retaliating_) {
      decrease();
      next_ = Action::D;
    } else {
      next_ = Action::C;
    }
  }
  double next_probability(const History&) override { return coop(next_ == Action::C); }
  void reset() override {
    retaliating_ = false;
    length_ = remaining_ = 0;
    next_ = Action::C;
  }

 private:
  void decrease() {
    if (!retaliating_) return;
    if (--remaining_ == 0) retaliating_ = false;
  }

  bool retaliating_ = false;
  int length_ = 0;
  int remaining_ = 0;
  Action next_ = Action::C;
};

class Feld final : public Strategy {
 public:
  Feld(double start_p, double end_p, int decay) : start_(start_p), end_(end_p), decay_(decay) {}

 protected:
  double next_probability(const History& h) override {
    if (h.empty()) return 1.0;
    if (h.back().opp == Action::D) return 0.0;
    const double slope = (end_ - start_) / decay_;
    return std::max(start_ + slope * static_cast<double>(h.size()), end_);
  }

 private:
  double start_, end_;
  int decay_;
};

class Tullock final : public Strategy {
 protected:
  double next_probability(const History& h) override {
    constexpr std::size_t kOpening = 11;
    constexpr std::size_t kLookback = kOpening - 1;
    if (h.size() < kOpening) return 1.0;
    auto count = std::count_if(h.end() - kLookback, h.end(),
                               [](const HistoryEntry& e) { return e.opp == Action::C; });
    return std::max(0.0, static_cast<double>(count) / kLookback - 0.10);
  }
};

// Estimates how the opponent responds to own C and D and plays the move with
// the larger expected payoff.
class Downing final : public Strategy {
 protected:
  void observe(const HistoryEntry& e, std::size_t round) override {
    if (round == 1) {
      if (e.opp == Action::C) ++resp_to_c_;
    } else if (e.opp == Action::C) {
      (prev_self_ == Action::C ? resp_to_c_ : resp_to_d_) += 1;
    }
    (e.self == Action::C ? own_c_ : own_d_) += 1;
    prev_self_ = e.self;
  }
  void reset() override {
    resp_to_c_ = resp_to_d_ = own_c_ = own_d_ = 0;
    prev_self_ = Action::C;
  }

  double next_probability(const History& h) override {
    if (h.size() < 2) return 0.0;
    const auto& m = info().payoffs;
    const double alpha = static_cast<double>(resp_to_c_) / (own_c_ + 1);
    const double beta = static_cast<double>(resp_to_d_) / std::max(own_d_, 2);
    const double ev_c = alpha * m.R() + (1 - alpha) * m.L();
    const double ev_d = beta * m.H() + (1 - beta) * m.P();
    if (ev_c > ev_d) return 1.0;
    if (ev_c < ev_d) return 0.0;
    return coop(flip(prev_self_) == Action::C);
  }

 private:
  int resp_to_c_ = 0;
  int resp_to_d_ = 0;
  int own_c_ = 0;
  int own_d_ = 0;
  Action prev_self_ = Action::C;
};

class Switch final : public Strategy {
 public:
  Switch(std::unique_ptr<Strategy> first, StrategySpec second, int k, const Catalog& catalog)
      : first_(std::move(first)), second_spec_(std::move(second)), k_(k), catalog_(catalog) {}

  void begin_match(const MatchInfo& info) override {
    Strategy::begin_match(info);
    first_->begin_match(info);
    second_.reset();
  }

  std::map<std::string, std::string> metadata() const override {
    return {{"switch_round", std::to_string(k_)}};
  }

 protected:
  double next_probability(const History& h) override {
    const std::size_t round = h.size() + 1;
    if (round < static_cast<std::size_t>(k_)) return first_->cooperation_probability(h);
    if (!second_) {
      // Fresh instance replays the whole history on its first query.
      second_ = make_builtin(second_spec_, catalog_);
      second_->begin_match(info());
    }
    return second_->cooperation_probability(h);
  }

 private:
  std::unique_ptr<Strategy> first_;
  StrategySpec second_spec_;
  int k_;
  const Catalog& catalog_;
  std::unique_ptr<Strategy> second_;
};

}  // namespace

std::unique_ptr<Strategy> always_cooperate() { return std::make_unique<Constant>(1.0); }
std::unique_ptr<Strategy> always_defect() { return std::make_unique<Constant>(0.0); }
std::unique_ptr<Strategy> grim() { return std::make_unique<Grim>(); }
std::unique_ptr<Strategy> tit_for_tat() { return std::make_unique<TitForTat>(Action::C); }
std::unique_ptr<Strategy> suspicious_tit_for_tat() {
  return std::make_unique<TitForTat>(Action::D);
}
std::unique_ptr<Strategy> two_step_copy() { return std::make_unique<TwoStepCopy>(); }

std::unique_ptr<Strategy> generous_tit_for_tat(double defect_probability) {
  if (!(defect_probability >= 0.0 && defect_probability <= 1.0)) {
    fail(ErrorCode::InvalidParams, "generous_tit_for_tat p must lie in [0, 1]");
  }
  return std::make_unique<GenerousTitForTat>(defect_probability);
}

std::unique_ptr<Strategy> win_stay_lose_shift() { return std::make_unique<WinStayLoseShift>(); }

std::unique_ptr<Strategy> random(double p_coop) {
  if (!(p_coop >= 0.0 && p_coop <= 1.0)) {
    fail(ErrorCode::InvalidParams, "random p_coop must lie in [0, 1]");
  }
  return std::make_unique<Constant>(p_coop);
}

std::unique_ptr<Strategy> first_by_joss(double p) { return std::make_unique<Joss>(p); }
std::unique_ptr<Strategy> first_by_grofman() { return std::make_unique<Grofman>(); }
std::unique_ptr<Strategy> first_by_shubik() { return std::make_unique<Shubik>(); }
std::unique_ptr<Strategy> first_by_feld(double start_p, double end_p, int rounds_of_decay) {
  if (rounds_of_decay < 1) fail(ErrorCode::InvalidParams, "rounds_of_decay must be >= 1");
  return std::make_unique<Feld>(start_p, end_p, rounds_of_decay);
}
std::unique_ptr<Strategy> first_by_tullock() { return std::make_unique<Tullock>(); }
std::unique_ptr<Strategy> first_by_downing() { return std::make_unique<Downing>(); }

// The published rule draws a fresh cooperation probability uniformly from
// [0.3, 0.7] each round; the marginal probability of cooperating is 0.5.
std::unique_ptr<Strategy> first_by_anonymous() { return std::make_unique<Constant>(0.5); }

std::unique_ptr<Strategy> switch_composite(std::unique_ptr<Strategy> first, StrategySpec second,
                                           int switch_round, const Catalog& catalog) {
  return std::make_unique<Switch>(std::move(first), std::move(second), switch_round, catalog);
}

}  // namespace ipd::strategies

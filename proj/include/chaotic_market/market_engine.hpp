#pragma once

// Gas-like market driven by the bimap. Each transaction t:
//   1. advance the map one step,
//   2. loser i = trunc(x N), winner j = trunc(y N),
//   3. draw upsilon ~ U[0,1),
//   4. move dm = upsilon (m_i + m_j) / 2 from i to j, unless i == j or m_i < dm.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chaotic_market/chaos_core.hpp"
#include "chaotic_market/errors.hpp"

namespace chaotic_market {

inline constexpr double kConservationTolerance = 1e-9;

class MarketConfig {
 public:
  MarketConfig(std::size_t n_agents, double initial_money)
      : n_agents_(n_agents), initial_money_(initial_money) {
    if (n_agents < 2) throw std::invalid_argument("market needs at least 2 agents");
    if (!(std::isfinite(initial_money) && initial_money > 0.0)) {
      throw std::invalid_argument("initial money must be finite and positive");
    }
    total_money_ = static_cast<double>(n_agents) * initial_money;
  }

  std::size_t n_agents() const noexcept { return n_agents_; }
  double initial_money() const noexcept { return initial_money_; }
  double total_money() const noexcept { return total_money_; }

 private:
  std::size_t n_agents_;
  double initial_money_;
  double total_money_;
};

// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> values) noexcept {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

class Ledger {
 public:
  Ledger(std::size_t n_agents, double initial_money) : balances_(n_agents, initial_money) {}
  explicit Ledger(std::vector<double> balances) : balances_(std::move(balances)) {
    for (double b : balances_) {
      if (!(b >= 0.0)) throw std::invalid_argument("ledger balances must be >= 0");
    }
  }

  std::size_t size() const noexcept { return balances_.size(); }
  double operator[](std::size_t i) const { return balances_[i]; }
  std::span<const double> balances() const noexcept { return balances_; }
  double total() const noexcept { return compensated_sum(balances_); }

  // Unchecked; apply_trade owns the guard.
  void transfer(std::size_t from, std::size_t to, double amount) noexcept {
    balances_[from] -= amount;
    balances_[to] += amount;
  }

  friend bool operator==(const Ledger&, const Ledger&) = default;

 private:
  std::vector<double> balances_;
};

struct AgentPair {
  std::size_t loser = 0;   // i: pays dm
  std::size_t winner = 0;  // j: receives dm

  friend bool operator==(const AgentPair&, const AgentPair&) = default;
};

enum class TradeOutcome { executed, self_pair, insufficient_funds };

struct TradeRecord {
  std::uint64_t t = 0;
  AgentPair pair;
  double upsilon = 0.0;
  double delta_m = 0.0;
  TradeOutcome outcome = TradeOutcome::executed;

  bool executed() const noexcept { return outcome == TradeOutcome::executed; }
};

// Per-agent role tallies.
struct AgentActivity {
  std::vector<std::uint64_t> times_as_loser;
  std::vector<std::uint64_t> times_as_winner;
  std::vector<std::uint64_t> executed_as_loser;
  std::vector<std::uint64_t> executed_as_winner;

  AgentActivity() = default;
  explicit AgentActivity(std::size_t n_agents)
      : times_as_loser(n_agents, 0),
        times_as_winner(n_agents, 0),
        executed_as_loser(n_agents, 0),
        executed_as_winner(n_agents, 0) {}

  std::size_t size() const noexcept { return times_as_loser.size(); }

  void record(const TradeRecord& r) noexcept {
    ++times_as_loser[r.pair.loser];
    ++times_as_winner[r.pair.winner];
    if (r.executed()) {
      ++executed_as_loser[r.pair.loser];
      ++executed_as_winner[r.pair.winner];
    }
  }

  bool moved_money(std::size_t agent) const noexcept {
    return executed_as_loser[agent] + executed_as_winner[agent] > 0;
  }
  bool ever_selected(std::size_t agent) const noexcept {
    return times_as_loser[agent] + times_as_winner[agent] > 0;
  }

  friend bool operator==(const AgentActivity&, const AgentActivity&) = default;
};

// Truncation toward zero; a coordinate of exactly 1.0 clamps to N - 1.
inline AgentPair select_agents(const ChaoticState& s, std::size_t n_agents) noexcept {
  const auto to_index = [n_agents](double c) {
    const auto idx = static_cast<std::size_t>(c * static_cast<double>(n_agents));
    return std::min(idx, n_agents - 1);
  };
  return {to_index(s.x), to_index(s.y)};
}

// Seeded source of exchange fractions on [0,1). mt19937_64 output is fully
// specified by the standard; the top 53 bits are scaled by 2^-53, which
// makes the stream bit-portable (std::uniform_real_distribution is not).
class FractionSource {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64;upsilon=(u64>>11)*2^-53";

  explicit FractionSource(std::uint64_t seed) : engine_(seed) {}

  double next() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()() noexcept { return next(); }

 private:
  std::mt19937_64 engine_;
};

inline double draw_fraction(FractionSource& rng) noexcept { return rng.next(); }

inline TradeRecord apply_trade(Ledger& ledger, AgentPair pair, double upsilon, std::uint64_t t) {
  if (pair.loser >= ledger.size() || pair.winner >= ledger.size()) {
    throw std::out_of_range("apply_trade: agent index out of range");
  }
  if (!(upsilon >= 0.0 && upsilon <= 1.0)) {
    throw std::invalid_argument("apply_trade: upsilon outside [0,1]");
  }
  TradeRecord rec{t, pair, upsilon, 0.0, TradeOutcome::executed};
  const double m_i = ledger[pair.loser];
  rec.delta_m = upsilon * (m_i + ledger[pair.winner]) / 2.0;
  if (pair.loser == pair.winner) {
    rec.outcome = TradeOutcome::self_pair;
  } else if (m_i < rec.delta_m) {
    rec.outcome = TradeOutcome::insufficient_funds;
  } else {
    ledger.transfer(pair.loser, pair.winner, rec.delta_m);
    assert(ledger[pair.loser] >= 0.0);
  }
  return rec;
}

struct SimulationSummary {
  std::uint64_t total_steps = 0;
  std::uint64_t executed = 0;
  std::uint64_t skipped_insufficient = 0;
  std::uint64_t skipped_self = 0;
  double total_money = 0.0;             // compensated sum of final balances
  double relative_conservation_error = 0.0;
  ChaoticState final_map_state;
};

struct SimulationResult {
  Ledger ledger;
  AgentActivity activity;
  SimulationSummary summary;
};

struct NoTrace {
  void operator()(const TradeRecord&) const noexcept {}
};

namespace detail {

inline double conservation_error(const Ledger& ledger, const MarketConfig& market) {
  return std::abs(ledger.total() - market.total_money()) / market.total_money();
}

inline void check_conservation(const Ledger& ledger, const MarketConfig& market,
                               std::uint64_t t) {
  const double err = conservation_error(ledger, market);
  if (!(err <= kConservationTolerance)) {
    throw ConservationError("money not conserved at step " + std::to_string(t) +
                            ": relative error " + std::to_string(err));
  }
}

}  // namespace detail

// `draw` is any callable returning the next upsilon in [0,1]; `trace`
// receives every TradeRecord in order (executed or not).
template <std::invocable FractionGen, class TraceSink = NoTrace>
SimulationResult run_simulation(const MarketConfig& market, const MapParams& params,
                                ChaoticState start, std::uint64_t discard,
                                std::uint64_t total_steps, FractionGen&& draw,
                                TraceSink&& trace = {}) {
  if (total_steps < 1) throw std::invalid_argument("run_simulation: total_steps must be >= 1");
  if (!start.valid()) throw MapRangeError("run_simulation: start state outside the unit square");

  const std::size_t n = market.n_agents();
  SimulationResult res{Ledger(n, market.initial_money()), AgentActivity(n), {}};
  auto& sum = res.summary;
  sum.total_steps = total_steps;

  ChaoticState s = start;
  for (std::uint64_t k = 0; k < discard; ++k) s = step(s, params);

  constexpr std::uint64_t kCheckEvery = std::uint64_t{1} << 22;
  for (std::uint64_t t = 1; t <= total_steps; ++t) {
    s = step(s, params);
    const TradeRecord rec = apply_trade(res.ledger, select_agents(s, n), draw(), t);
    res.activity.record(rec);
    switch (rec.outcome) {
      case TradeOutcome::executed: ++sum.executed; break;
      case TradeOutcome::self_pair: ++sum.skipped_self; break;
      case TradeOutcome::insufficient_funds: ++sum.skipped_insufficient; break;
    }
    trace(rec);
    if (t % kCheckEvery == 0) detail::check_conservation(res.ledger, market, t);
  }
  detail::check_conservation(res.ledger, market, total_steps);
  sum.total_money = res.ledger.total();
  sum.relative_conservation_error = detail::conservation_error(res.ledger, market);
  sum.final_map_state = s;
  return res;
}

inline SimulationResult run_simulation(const MarketConfig& market, const MapParams& params,
                                       ChaoticState start, std::uint64_t discard,
                                       std::uint64_t total_steps, std::uint64_t seed) {
  FractionSource rng(seed);
  return run_simulation(market, params, start, discard, total_steps,
                        [&rng] { return draw_fraction(rng); });
}

struct PassiveReport {
  std::vector<std::size_t> passive;  // never moved money (ascending index)
  std::size_t never_selected = 0;    // subset that was never even drawn
};

inline PassiveReport passive_agents(const AgentActivity& activity) {
  PassiveReport rep;
  for (std::size_t a = 0; a < activity.size(); ++a) {
    if (!activity.moved_money(a)) rep.passive.push_back(a);
    if (!activity.ever_selected(a)) ++rep.never_selected;
  }
  return rep;
}

// Complement of passive_agents: agents that moved money at least once.
inline std::vector<std::size_t> active_agents(const AgentActivity& activity) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < activity.size(); ++a) {
    if (activity.moved_money(a)) out.push_back(a);
  }
  return out;
}

inline std::vector<std::size_t> all_agents(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t a = 0; a < n; ++a) out[a] = a;
  return out;
}

}  // namespace chaotic_market

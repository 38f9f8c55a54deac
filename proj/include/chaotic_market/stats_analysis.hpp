#pragma once

// Observables of a finished market: histograms, empirical CCDFs, straight-line
// fits on semilog / log-log CCDFs, class breakdowns and win/loss profiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "chaotic_market/market_engine.hpp"

namespace chaotic_market {

namespace detail {

inline std::vector<double> gather(std::span<const double> balances,
                                  std::span<const std::size_t> include) {
  if (include.empty()) throw std::invalid_argument("empty include set");
  std::vector<double> out;
  out.reserve(include.size());
  for (std::size_t a : include) {
    if (a >= balances.size()) throw std::out_of_range("include index out of range");
    out.push_back(balances[a]);
  }
  return out;
}

}  // namespace detail

struct Histogram {
  std::vector<double> bin_edges;  // n_bins + 1, strictly increasing
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  }
};

// Equal-width bins over [lo, hi). Values below lo land in the first bin and
// values >= hi in the last one, so every included agent is counted.
inline Histogram histogram(std::span<const double> balances, std::span<const std::size_t> include,
                           std::size_t n_bins, double lo, double hi) {
  if (n_bins < 1) throw std::invalid_argument("histogram: n_bins must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("histogram: lo must be < hi");
  const auto values = detail::gather(balances, include);

  Histogram h;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  h.bin_edges.resize(n_bins + 1);
  for (std::size_t b = 0; b < n_bins; ++b) h.bin_edges[b] = lo + width * static_cast<double>(b);
  h.bin_edges[n_bins] = hi;
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    std::size_t bin = 0;
    if (v >= hi) {
      bin = n_bins - 1;
    } else if (v > lo) {
      bin = std::min(static_cast<std::size_t>((v - lo) / width), n_bins - 1);
    }
    ++h.counts[bin];
  }
  return h;
}

struct Ccdf {
  std::vector<double> money_levels;  // distinct included balances, ascending
  std::vector<double> prob_geq;      // P(money >= level), nonincreasing, in (0,1]
  std::size_t n_samples = 0;
};

inline Ccdf ccdf(std::span<const double> balances, std::span<const std::size_t> include) {
  auto values = detail::gather(balances, include);
  std::sort(values.begin(), values.end());
  Ccdf c;
  c.n_samples = values.size();
  const auto n = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0 && values[k] == values[k - 1]) continue;
    c.money_levels.push_back(values[k]);
    c.prob_geq.push_back(static_cast<double>(values.size() - k) / n);
  }
  return c;
}

struct ClassBounds {
  double poor_upper = 500.0;
  double middle_upper = 2000.0;
};

struct ClassShare {
  std::size_t count = 0;
  double money = 0.0;
  double population_share = 0.0;
  double money_share = 0.0;
};

struct ClassBreakdown {
  ClassBounds bounds;
  ClassShare poor;    // [0, poor_upper)
  ClassShare middle;  // [poor_upper, middle_upper)
  ClassShare rich;    // [middle_upper, inf)
};

// Shares are relative to the include set. If the included agents hold no
// money at all, every money share is 0.
inline ClassBreakdown classify(std::span<const double> balances,
                               std::span<const std::size_t> include, ClassBounds bounds) {
  if (!(bounds.poor_upper > 0.0 && bounds.poor_upper < bounds.middle_upper)) {
    throw std::invalid_argument("classify: need 0 < poor_upper < middle_upper");
  }
  const auto values = detail::gather(balances, include);
  ClassBreakdown cb;
  cb.bounds = bounds;
  std::vector<double> poor_m, middle_m, rich_m;
  for (double v : values) {
    if (v < bounds.poor_upper) {
      poor_m.push_back(v);
    } else if (v < bounds.middle_upper) {
      middle_m.push_back(v);
    } else {
      rich_m.push_back(v);
    }
  }
  const double total = compensated_sum(values);
  const auto n = static_cast<double>(values.size());
  const auto fill = [&](ClassShare& cs, const std::vector<double>& m) {
    cs.count = m.size();
    cs.money = compensated_sum(m);
    cs.population_share = static_cast<double>(cs.count) / n;
    cs.money_share = total > 0.0 ? cs.money / total : 0.0;
  };
  fill(cb.poor, poor_m);
  fill(cb.middle, middle_m);
  fill(cb.rich, rich_m);
  return cb;
}

enum class FitModel { exponential, pareto };

inline std::string_view to_string(FitModel m) noexcept {
  return m == FitModel::exponential ? "exponential" : "pareto";
}

struct FitRange {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

struct FitResult {
  FitModel model = FitModel::exponential;
  double parameter = 0.0;  // T_eff (exponential) or tail exponent (pareto)
  FitRange fit_range;
  double r_squared = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n_points = 0;
  // Nonnegative slope: the data do not decay; parameter is NaN.
  bool flagged = false;
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares with centred sums.
inline LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double dx = xs[k] - mx;
    const double dy = ys[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit f;
  if (sxx == 0.0) throw std::invalid_argument("fit: all abscissae equal");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy == 0.0) {
    f.r_squared = 0.0;
    return f;
  }
  double ss_res = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (f.intercept + f.slope * xs[k]);
    ss_res += r * r;
  }
  f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return f;
}

inline FitResult finish_fit(FitModel model, FitRange range, std::span<const double> xs,
                            std::span<const double> ys) {
  const LineFit line = least_squares(xs, ys);
  FitResult r;
  r.model = model;
  r.fit_range = range;
  r.slope = line.slope;
  r.intercept = line.intercept;
  r.r_squared = line.r_squared;
  r.n_points = xs.size();
  if (line.slope >= 0.0) {
    r.flagged = true;
    r.parameter = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.parameter = model == FitModel::exponential ? -1.0 / line.slope : -line.slope;
  }
  return r;
}

}  // namespace detail

// Levels from the smallest up to the last one with P(>= m) >= min_prob.
inline FitRange exponential_fit_range(const Ccdf& c, double min_prob = 0.01) {
  if (c.money_levels.empty()) throw std::invalid_argument("exponential_fit_range: empty ccdf");
  FitRange r{c.money_levels.front(), c.money_levels.front()};
  for (std::size_t k = 0; k < c.money_levels.size(); ++k) {
    if (c.prob_geq[k] >= min_prob) r.hi = c.money_levels[k];
  }
  return r;
}

// Straight line through (m, ln P(>= m)) for m in [lo, hi]; T_eff = -1/slope.
inline FitResult fit_exponential(const Ccdf& c, FitRange range) {
  if (!(range.lo < range.hi)) throw std::invalid_argument("fit_exponential: need lo < hi");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < c.money_levels.size(); ++k) {
    const double m = c.money_levels[k];
    if (m < range.lo || m > range.hi || !(c.prob_geq[k] > 0.0)) continue;
    xs.push_back(m);
    ys.push_back(std::log(c.prob_geq[k]));
  }
  if (xs.size() < 3) throw std::invalid_argument("fit_exponential: fewer than 3 levels in range");
  return detail::finish_fit(FitModel::exponential, range, xs, ys);
}

// Straight line through (ln m, ln P(>= m)) for tail_threshold <= m <= upper;
// exponent = -slope. Two-segment tails are two calls with adjacent ranges.
inline FitResult fit_pareto(const Ccdf& c, double tail_threshold,
                            double upper = std::numeric_limits<double>::infinity()) {
  if (!(tail_threshold > 0.0)) throw std::invalid_argument("fit_pareto: threshold must be > 0");
  if (!(tail_threshold < upper)) throw std::invalid_argument("fit_pareto: need threshold < upper");
  std::vector<double> xs, ys;
  double max_used = tail_threshold;
  for (std::size_t k = 0; k < c.money_levels.size(); ++k) {
    const double m = c.money_levels[k];
    if (m < tail_threshold || m > upper || !(c.prob_geq[k] > 0.0)) continue;
    xs.push_back(std::log(m));
    ys.push_back(std::log(c.prob_geq[k]));
    max_used = m;
  }
  if (xs.size() < 3) throw std::invalid_argument("fit_pareto: fewer than 3 tail levels");
  const FitRange range{tail_threshold, std::isfinite(upper) ? upper : max_used};
  return detail::finish_fit(FitModel::pareto, range, xs, ys);
}

// Hill estimator of the tail exponent with x_min = tail_threshold. Cross-check
// only; fit_pareto is the reported estimate.
inline double hill_tail_exponent(std::span<const double> balances,
                                 std::span<const std::size_t> include, double tail_threshold) {
  if (!(tail_threshold > 0.0)) throw std::invalid_argument("hill: threshold must be > 0");
  const auto values = detail::gather(balances, include);
  std::size_t k = 0;
  double log_sum = 0.0;
  for (double v : values) {
    if (v < tail_threshold) continue;
    ++k;
    log_sum += std::log(v / tail_threshold);
  }
  if (k < 3 || log_sum <= 0.0) throw std::invalid_argument("hill: not enough tail samples");
  return static_cast<double>(k) / log_sum;
}

struct WinLossEntry {
  std::size_t rank = 0;  // 0 = richest
  std::size_t agent = 0;
  double money = 0.0;
  std::uint64_t losses = 0;           // times selected as loser
  std::uint64_t executed_losses = 0;  // times actually paid
  std::int64_t net_wins = 0;          // times_as_winner - times_as_loser
};

using WinLossProfile = std::vector<WinLossEntry>;

// Agents by final money descending; ties by agent index ascending.
inline WinLossProfile winloss_profile(const AgentActivity& activity,
                                      std::span<const double> balances) {
  if (activity.size() != balances.size()) {
    throw std::invalid_argument("winloss_profile: activity/balances length mismatch");
  }
  auto order = all_agents(balances.size());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (balances[a] != balances[b]) return balances[a] > balances[b];
    return a < b;
  });
  WinLossProfile prof;
  prof.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t a = order[r];
    prof.push_back({r, a, balances[a], activity.times_as_loser[a],
                    activity.executed_as_loser[a],
                    static_cast<std::int64_t>(activity.times_as_winner[a]) -
                        static_cast<std::int64_t>(activity.times_as_loser[a])});
  }
  return prof;
}

// Active agents that never paid in an executed trade, ascending index.
inline std::vector<std::size_t> never_losers(const AgentActivity& activity) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < activity.size(); ++a) {
    if (activity.moved_money(a) && activity.executed_as_loser[a] == 0) out.push_back(a);
  }
  return out;
}

}  // namespace chaotic_market

// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 if any
// selected criterion fails.
//
//   acceptance [--criterion N]... [--work-dir DIR] [--full-scale]
//
// Without --criterion, runs 1-10, plus 11 when --full-scale is given.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chaotic_market.hpp"
#include "support/brute_force_market.hpp"

using namespace chaotic_market;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig desk_config(const fs::path& out, double lambda_b) {
  auto c = load_config("", preset_document("desk"));
  c.lambda_b = lambda_b;
  c.output_dir = out;
  c.emit_trace = false;
  return c;
}

std::vector<std::string> csv_names(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      names.push_back(fs::relative(e.path(), dir).string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

// Empty string when identical, else the first difference.
std::string compare_trees(const fs::path& a, const fs::path& b) {
  const auto na = csv_names(a), nb = csv_names(b);
  if (na != nb) return "file sets differ";
  if (na.empty()) return "no data files";
  for (const auto& n : na) {
    if (csv::read_file(a / n) != csv::read_file(b / n)) return n + " differs";
  }
  return {};
}

// Replays every executed trade on a private copy of the balances and records
// the smallest balance ever seen.
struct NegativeWatch {
  std::vector<double> money;
  double min_seen;
  NegativeWatch(std::size_t n, double m0) : money(n, m0), min_seen(m0) {}
  void operator()(const TradeRecord& r) {
    if (!r.executed()) return;
    money[r.pair.loser] -= r.delta_m;
    money[r.pair.winner] += r.delta_m;
    min_seen = std::min(min_seen, money[r.pair.loser]);
  }
};

Verdict criterion_1(const fs::path&) {
  double worst_err = 0.0, worst_min = INFINITY;
  int runs = 0;
  auto check = [&](std::size_t n, double lb, std::uint64_t steps, std::uint64_t seed) {
    const MarketConfig market(n, 1000.0);
    FractionSource rng(seed);
    NegativeWatch watch(n, 1000.0);
    const auto res = run_simulation(market, MapParams(1.032, lb), kDefaultMapStart,
                                    kDefaultMapDiscard, steps, [&] { return draw_fraction(rng); },
                                    watch);
    worst_err = std::max(worst_err, res.summary.relative_conservation_error);
    worst_min = std::min(worst_min, watch.min_seen);
    for (double m : res.ledger.balances()) worst_min = std::min(worst_min, m);
    ++runs;
  };
  for (const auto& c : reference_cases()) {
    check(500, c.lambda_b, 500'000, 1);
    for (std::uint64_t seed : {1, 2, 12345}) check(50, c.lambda_b, 10'000, seed);
  }
  return {worst_err <= 1e-9 && worst_min >= 0.0,
          fmt("%d runs, max relative error %.3g, min balance ever %.6g", runs, worst_err,
              worst_min)};
}

Verdict criterion_2(const fs::path&) {
  const auto t0 = Clock::now();
  std::size_t outside = 0;
  for (const auto& c : reference_cases()) {
    try {
      for (const auto& p : iterate({0.3, 0.6}, MapParams(1.032, c.lambda_b), 1'000'000, 0)) {
        outside += !(p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1);
      }
    } catch (const MapRangeError&) {
      ++outside;
    }
  }
  bool fixed = true;
  for (const auto& c : reference_cases()) {
    fixed = fixed && step({0.0, 0.0}, MapParams(1.032, c.lambda_b)) == ChaoticState{0.0, 0.0};
  }
  const double secs = seconds_since(t0);
  return {outside == 0 && fixed && secs <= 1.0,
          fmt("8x1e6 iterates, %zu outside; origin fixed: %s; %.3f s", outside,
              fixed ? "yes" : "no", secs)};
}

Verdict criterion_3(const fs::path&) {
  const auto st = occupancy_asymmetry(
      iterate(kDefaultMapStart, MapParams(1.032, 1.032), 1'000'000, kDefaultMapDiscard));
  const double gap = std::abs(st.frac_x_gt_y - st.frac_y_gt_x);
  return {gap <= 0.01, fmt("x>y %.6f, y>x %.6f, |diff| %.6f (limit 0.01)", st.frac_x_gt_y,
                           st.frac_y_gt_x, gap)};
}

Verdict criterion_4(const fs::path&) {
  const std::size_t window = kDefaultSpectrumWindow;
  const auto xs = x_series(
      iterate(kDefaultMapStart, MapParams(1.032, 1.032), window, kDefaultMapDiscard));
  const auto sp = power_spectrum(xs, window);
  const std::size_t k = sp.peak_index() + 1;  // bin numbering starts at w = 1/window
  return {k == window / 2 && sp.freqs[sp.peak_index()] == 0.5,
          fmt("peak at bin %zu, w = %.17g (expected bin %zu)", k, sp.freqs[sp.peak_index()],
              window / 2)};
}

Verdict criterion_5(const fs::path& work) {
  const auto t0 = Clock::now();
  const auto art = run_case(desk_config(work / "c5", 1.032));
  const double secs = seconds_since(t0);
  const auto fit = art.fit(FitModel::exponential);
  if (!fit || fit->flagged) return {false, "exponential fit missing or flagged"};
  const double rel = std::abs(fit->parameter - art.active_mean_money) / art.active_mean_money;
  return {fit->r_squared >= 0.97 && rel <= 0.10 && secs <= 10.0,
          fmt("r2 %.5f, T_eff %.2f vs active mean %.2f (%.2f%%), %zu active, %.2f s",
              fit->r_squared, fit->parameter, art.active_mean_money, 100 * rel, art.active_count,
              secs)};
}

Verdict criterion_6(const fs::path& work) {
  const auto t0 = Clock::now();
  const auto sum =
      run_sweep(SweepSpec{desk_config(work / "c6", 1.032)}, std::thread::hardware_concurrency());
  const double secs = seconds_since(t0);
  if (!sum.all_ok()) return {false, "a sweep case failed"};
  const auto& first = sum.rows.front().artifacts->classes;
  const auto& last = sum.rows.back().artifacts->classes;
  const bool richer = last.rich.money_share > first.rich.money_share;
  const bool collapsed = last.middle.population_share <= 0.01;
  return {richer && collapsed && secs <= 120.0,
          fmt("rich money share %.4f -> %.4f; middle population at case 8 %.4f%% (limit 1%%); "
              "%.1f s",
              first.rich.money_share, last.rich.money_share,
              100 * last.middle.population_share, secs)};
}

Verdict criterion_7(const fs::path& work) {
  const auto cfg = desk_config(work / "c7", 1.08429);
  const auto art = run_case(cfg);
  const auto sim = run_simulation(cfg.market(), cfg.map_params(), cfg.map_start, cfg.map_discard,
                                  cfg.steps(), cfg.rng_seed);
  const auto prof = winloss_profile(sim.activity, sim.ledger.balances());
  std::vector<std::size_t> rank(prof.size());
  for (const auto& e : prof) rank[e.agent] = e.rank;
  const std::size_t decile = cfg.n_agents / 10;
  std::size_t outside = 0, worst = 0;
  for (std::size_t a : art.never_losers) {
    outside += rank[a] >= decile;
    worst = std::max(worst, rank[a]);
  }
  return {!art.never_losers.empty() && outside == 0,
          fmt("%zu never-losers, %zu outside top %zu, worst rank %zu", art.never_losers.size(),
              outside, decile, worst + 1)};
}

Verdict criterion_8(const fs::path&) {
  int runs = 0, mismatches = 0;
  for (const auto& c : reference_cases()) {
    for (std::uint64_t seed : {1, 2, 12345}) {
      const auto sim = run_simulation(MarketConfig(50, 1000.0), MapParams(1.032, c.lambda_b),
                                      kDefaultMapStart, kDefaultMapDiscard, 10'000, seed);
      const auto ref = oracle::brute_force_market(50, 1000.0, 1.032, c.lambda_b, 0.3, 0.6,
                                                  kDefaultMapDiscard, 10'000, seed);
      bool same = true;
      for (std::size_t a = 0; a < 50; ++a) {
        same = same && sim.ledger[a] == ref.money[a] &&
               sim.activity.executed_as_loser[a] == static_cast<std::uint64_t>(ref.exec_i[a]) &&
               sim.activity.executed_as_winner[a] == static_cast<std::uint64_t>(ref.exec_j[a]);
      }
      mismatches += !same;
      ++runs;
    }
  }
  return {mismatches == 0, fmt("%d runs, %d mismatches", runs, mismatches)};
}

Verdict criterion_9(const fs::path&) {
  Ccdf e;
  for (int m = 0; m <= 2000; m += 100) {
    e.money_levels.push_back(m);
    e.prob_geq.push_back(std::exp(-m / 1000.0));
  }
  e.n_samples = e.money_levels.size();
  const auto ef = fit_exponential(e, {0.0, 2000.0});

  Ccdf p;
  for (int k = 0; k < 10; ++k) {
    const double m = 2000.0 * std::pow(10.0, k / 3.0);
    p.money_levels.push_back(m);
    p.prob_geq.push_back(std::pow(m / 2000.0, -1.5));
  }
  p.n_samples = p.money_levels.size();
  const auto pf = fit_pareto(p, 2000.0);

  const double e_err = std::abs(ef.parameter - 1000.0);
  const double p_err = std::abs(pf.parameter - 1.5);
  return {e_err <= 1e-9 && ef.r_squared >= 1 - 1e-12 && p_err <= 1e-9,
          fmt("T_eff error %.3g, r2 %.17g; exponent error %.3g", e_err, ef.r_squared, p_err)};
}

Verdict criterion_10(const fs::path& work) {
  std::vector<std::string> problems;
  const auto a = work / "c10" / "run_a", b = work / "c10" / "run_b";
  run_case(desk_config(a, 1.07267));
  run_case(desk_config(b, 1.07267));
  if (auto d = compare_trees(a, b); !d.empty()) problems.push_back("single run: " + d);

  const auto s1 = work / "c10" / "sweep_p1", s8 = work / "c10" / "sweep_p8";
  const auto r1 = run_sweep(SweepSpec{desk_config(s1, 1.032)}, 1);
  const auto r8 = run_sweep(SweepSpec{desk_config(s8, 1.032)}, 8);
  if (!r1.all_ok() || !r8.all_ok()) problems.push_back("sweep case failed");
  if (auto d = compare_trees(s1, s8); !d.empty()) problems.push_back("sweep: " + d);

  std::string detail = problems.empty() ? fmt("%zu sweep data files identical", csv_names(s1).size())
                                        : problems.front();
  return {problems.empty(), detail};
}

Verdict criterion_11(const fs::path& work) {
  const auto t0 = Clock::now();
  auto base = load_config("", preset_document("paper"));
  base.output_dir = work / "c11";
  const auto sum = run_sweep(SweepSpec{base}, std::thread::hardware_concurrency());
  const double secs = seconds_since(t0);
  if (!sum.all_ok()) return {false, "a sweep case failed"};

  const double rich8 = sum.rows.back().artifacts->classes.rich.money_share;
  bool zero_middle = true;
  std::ostringstream middle;
  for (const auto& r : sum.rows) {
    if (r.sweep_case.lambda_b < 1.06105) continue;
    const auto& m = r.artifacts->classes.middle;
    zero_middle = zero_middle && m.count == 0;
    middle << " case " << r.sweep_case.case_id << ": " << m.count;
  }
  const double tps = 8.0 * static_cast<double>(base.steps()) / secs;
  return {rich8 >= 0.95 && rich8 <= 1.0 && zero_middle,
          fmt("rich money share case 8 %.4f; middle agents for lambda_b >= 1.06105:%s; "
              "%.1f s, %.3g transactions/s aggregate",
              rich8, middle.str().c_str(), secs, tps)};
}

const std::map<int, std::pair<const char*, std::function<Verdict(const fs::path&)>>>& registry() {
  static const std::map<int, std::pair<const char*, std::function<Verdict(const fs::path&)>>> r{
      {1, {"conservation", criterion_1}},
      {2, {"map range and fixed point", criterion_2}},
      {3, {"symmetric occupancy", criterion_3}},
      {4, {"spectrum peak", criterion_4}},
      {5, {"Gibbs limit", criterion_5}},
      {6, {"Gibbs to Pareto trend (desk)", criterion_6}},
      {7, {"never-lose cohort", criterion_7}},
      {8, {"oracle equivalence", criterion_8}},
      {9, {"fit recovery", criterion_9}},
      {10, {"determinism", criterion_10}},
      {11, {"full-scale trend", criterion_11}},
  };
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> selected;
  std::string work_dir = "acceptance_work";
  bool full_scale = false;
  app.add_option("--criterion", selected, "criterion number (repeatable)")
      ->check(CLI::Range(1, 11));
  app.add_option("--work-dir", work_dir, "scratch directory for run outputs");
  app.add_flag("--full-scale", full_scale, "include criterion 11 when none is selected");
  CLI11_PARSE(app, argc, argv);

  if (selected.empty()) {
    for (int k = 1; k <= 10; ++k) selected.push_back(k);
    if (full_scale) selected.push_back(11);
  }

  int failures = 0;
  for (int k : selected) {
    const auto& [name, fn] = registry().at(k);
    const fs::path work = fs::path(work_dir) / ("criterion_" + std::to_string(k));
    fs::remove_all(work);
    fs::create_directories(work);
    Verdict v;
    try {
      v = fn(work);
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", k, name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

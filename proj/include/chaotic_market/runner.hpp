#pragma once

// Orchestration and persistence: single cases, parameter sweeps over a pool
// of worker threads, and attractor diagnostics. Every data file is a pure
// function of the config, so reruns are byte-identical.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "chaotic_market/chaos_core.hpp"
#include "chaotic_market/config.hpp"
#include "chaotic_market/csv.hpp"
#include "chaotic_market/market_engine.hpp"
#include "chaotic_market/stats_analysis.hpp"
#include "chaotic_market/version.hpp"

namespace chaotic_market {

namespace fs = std::filesystem;

struct ManifestEntry {
  std::string name;
  fs::path path;
};

struct RunArtifacts {
  fs::path dir;
  std::vector<ManifestEntry> files;

  SimulationSummary summary;
  PassiveReport passive;
  std::size_t active_count = 0;
  double active_mean_money = 0.0;
  ClassBreakdown classes;      // active agents (the reported convention)
  ClassBreakdown classes_all;  // every agent, passive included
  std::vector<FitResult> fits;
  std::optional<double> hill_exponent;
  std::vector<std::size_t> never_losers;

  const fs::path& file(std::string_view name) const {
    for (const auto& f : files) {
      if (f.name == name) return f.path;
    }
    throw std::out_of_range("no artifact named " + std::string(name));
  }

  std::optional<FitResult> fit(FitModel model) const {
    for (const auto& f : fits) {
      if (f.model == model) return f;
    }
    return std::nullopt;
  }
};

struct RunOptions {
  // Appended to metadata.kv verbatim.
  std::vector<std::pair<std::string, std::string>> extra_metadata;
};

namespace detail {

class ArtifactSink {
 public:
  explicit ArtifactSink(fs::path dir) : dir_(std::move(dir)) {}

  void save(const std::string& name, const csv::Writer& w) {
    const auto path = dir_ / name;
    w.save(path);
    files_.push_back({name, path});
  }

  void save_text(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
    files_.push_back({name, path});
  }

  std::vector<ManifestEntry> take() { return std::move(files_); }

 private:
  fs::path dir_;
  std::vector<ManifestEntry> files_;
};

inline void write_classes(ArtifactSink& sink, const std::string& name, const ClassBreakdown& cb) {
  csv::Writer w({"class", "population_share", "money_share"});
  w.row("poor", cb.poor.population_share, cb.poor.money_share);
  w.row("middle", cb.middle.population_share, cb.middle.money_share);
  w.row("rich", cb.rich.population_share, cb.rich.money_share);
  sink.save(name, w);
}

inline std::optional<FitResult> try_fit(auto&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // too few points for this range
  }
}

}  // namespace detail

// Runs one market, analyses it and writes every artifact into
// config.output_dir (created if needed).
inline RunArtifacts run_case(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  const MarketConfig market = config.market();
  const MapParams params = config.map_params();
  fs::create_directories(config.output_dir);

  std::optional<csv::Writer> trace;
  if (config.trace_enabled()) {
    trace.emplace(std::initializer_list<std::string_view>{"t", "loser", "winner", "upsilon",
                                                          "delta_m", "executed"});
  }
  FractionSource rng(config.rng_seed);
  const auto draw = [&rng] { return draw_fraction(rng); };
  SimulationResult sim =
      trace ? run_simulation(market, params, config.map_start, config.map_discard,
                             config.steps(), draw,
                             [&trace](const TradeRecord& r) {
                               trace->row(r.t, r.pair.loser, r.pair.winner, r.upsilon,
                                          r.delta_m, r.executed());
                             })
            : run_simulation(market, params, config.map_start, config.map_discard,
                             config.steps(), draw);

  RunArtifacts art;
  art.dir = config.output_dir;
  art.summary = sim.summary;
  art.passive = passive_agents(sim.activity);
  const auto balances = sim.ledger.balances();
  const auto active = active_agents(sim.activity);
  if (active.empty()) throw std::runtime_error("run_case: no agent ever exchanged money");
  const auto everyone = all_agents(market.n_agents());
  art.active_count = active.size();

  art.classes = classify(balances, active, config.class_bounds);
  art.classes_all = classify(balances, everyone, config.class_bounds);
  art.active_mean_money = (art.classes.poor.money + art.classes.middle.money +
                           art.classes.rich.money) /
                          static_cast<double>(active.size());

  const Ccdf dist = ccdf(balances, active);
  if (auto f = detail::try_fit([&] {
        return fit_exponential(dist, exponential_fit_range(dist, config.exp_fit_min_prob));
      })) {
    art.fits.push_back(*f);
  }
  const double tail_hi = config.pareto_break.value_or(std::numeric_limits<double>::infinity());
  if (auto f = detail::try_fit([&] { return fit_pareto(dist, config.pareto_threshold, tail_hi); })) {
    art.fits.push_back(*f);
  }
  if (config.pareto_break) {
    if (auto f = detail::try_fit([&] { return fit_pareto(dist, *config.pareto_break); })) {
      art.fits.push_back(*f);
    }
  }
  try {
    art.hill_exponent = hill_tail_exponent(balances, active, config.pareto_threshold);
  } catch (const std::invalid_argument&) {
  }
  art.never_losers = never_losers(sim.activity);
  const WinLossProfile profile = winloss_profile(sim.activity, balances);
  const Histogram hist =
      histogram(balances, everyone, config.histogram_bins, 0.0, config.histogram_max);

  detail::ArtifactSink sink(config.output_dir);

  std::string meta = "# run metadata\n";
  meta += "code_version = " + std::string(kVersion) + "\n";
  meta += "rng_algorithm = " + std::string(FractionSource::kAlgorithm) + "\n";
  meta += to_document(config);
  const auto kv = [&meta](std::string_view k, const std::string& v) {
    meta.append(k).append(" = ").append(v).append("\n");
  };
  for (const auto& [k, v] : options.extra_metadata) kv(k, v);
  using csv::format_number;
  kv("in_chaotic_window", params.in_chaotic_window() ? "true" : "false");
  kv("executed", format_number(sim.summary.executed));
  kv("skipped_insufficient", format_number(sim.summary.skipped_insufficient));
  kv("skipped_self", format_number(sim.summary.skipped_self));
  kv("total_money", format_number(sim.summary.total_money));
  kv("relative_conservation_error", format_number(sim.summary.relative_conservation_error));
  kv("active_agents", format_number(art.active_count));
  kv("passive_agents", format_number(art.passive.passive.size()));
  kv("never_selected", format_number(art.passive.never_selected));
  kv("never_losers", format_number(art.never_losers.size()));
  kv("final_map_x", format_number(sim.summary.final_map_state.x));
  kv("final_map_y", format_number(sim.summary.final_map_state.y));
  sink.save_text("metadata.kv", meta);

  {
    csv::Writer w({"agent_index", "final_money"});
    for (std::size_t a = 0; a < balances.size(); ++a) w.row(a, balances[a]);
    sink.save("balances.csv", w);
  }
  {
    csv::Writer w({"agent_index", "times_i", "times_j", "executed_as_i", "executed_as_j"});
    const auto& act = sim.activity;
    for (std::size_t a = 0; a < act.size(); ++a) {
      w.row(a, act.times_as_loser[a], act.times_as_winner[a], act.executed_as_loser[a],
            act.executed_as_winner[a]);
    }
    sink.save("activity.csv", w);
  }
  {
    csv::Writer w({"money_level", "prob_geq"});
    for (std::size_t k = 0; k < dist.money_levels.size(); ++k) {
      w.row(dist.money_levels[k], dist.prob_geq[k]);
    }
    sink.save("ccdf.csv", w);
  }
  detail::write_classes(sink, "classes.csv", art.classes);
  detail::write_classes(sink, "classes_all.csv", art.classes_all);
  {
    csv::Writer w({"model", "parameter", "lo", "hi", "r_squared"});
    for (const auto& f : art.fits) {
      w.row(to_string(f.model), f.parameter, f.fit_range.lo, f.fit_range.hi, f.r_squared);
    }
    if (art.hill_exponent) {
      w.row("pareto_hill", *art.hill_exponent, config.pareto_threshold,
            std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN());
    }
    sink.save("fits.csv", w);
  }
  {
    csv::Writer w({"rank", "agent_index", "losses", "net_wins"});
    for (const auto& e : profile) w.row(e.rank, e.agent, e.losses, e.net_wins);
    sink.save("winloss.csv", w);
  }
  {
    csv::Writer w({"bin_lo", "bin_hi", "count"});
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      w.row(hist.bin_edges[b], hist.bin_edges[b + 1], hist.counts[b]);
    }
    sink.save("histogram.csv", w);
  }
  if (trace) sink.save("trace.csv", *trace);

  art.files = sink.take();
  csv::Writer manifest({"name"});
  for (const auto& f : art.files) manifest.row(f.name);
  manifest.save(config.output_dir / "manifest.csv");
  art.files.push_back({"manifest.csv", config.output_dir / "manifest.csv"});
  return art;
}

struct SweepRow {
  SweepCase sweep_case;
  fs::path dir;
  bool ok = false;
  std::string error;
  std::optional<RunArtifacts> artifacts;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // in SweepSpec order
  fs::path summary_path;

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
  }
};

inline ExperimentConfig case_config(const SweepSpec& spec, const SweepCase& c) {
  ExperimentConfig cfg = spec.base;
  cfg.case_id = c.case_id;
  cfg.lambda_b = c.lambda_b;
  cfg.output_dir = spec.base.output_dir / ("case_" + c.case_id);
  return cfg;
}

// Runs every case, up to `parallelism` at a time, each in its own
// subdirectory, and writes summary.csv into the base output_dir. A failing
// case is recorded in its row; the other cases still run.
inline SweepSummary run_sweep(const SweepSpec& spec, std::size_t parallelism = 1) {
  if (parallelism < 1) throw std::invalid_argument("run_sweep: parallelism must be >= 1");
  spec.validate();
  fs::create_directories(spec.base.output_dir);

  SweepSummary out;
  out.rows.resize(spec.cases.size());
  const RunOptions options{{{"sweep_shared_seed_and_start", "true"}}};
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < spec.cases.size(); k = next++) {
      SweepRow& row = out.rows[k];
      row.sweep_case = spec.cases[k];
      const ExperimentConfig cfg = case_config(spec, spec.cases[k]);
      row.dir = cfg.output_dir;
      try {
        row.artifacts = run_case(cfg, options);
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  {
    const std::size_t n_threads = std::min(parallelism, spec.cases.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  csv::Writer w({"case_id", "lambda_a", "lambda_b", "status", "active_agents", "passive_agents",
                 "never_selected", "never_losers", "poor_money_share", "middle_money_share",
                 "rich_money_share", "poor_population_share", "middle_population_share",
                 "rich_population_share"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : out.rows) {
    if (!r.ok) {
      w.row(r.sweep_case.case_id, spec.base.lambda_a, r.sweep_case.lambda_b, "failed", nan, nan,
            nan, nan, nan, nan, nan, nan, nan, nan);
      continue;
    }
    const auto& a = *r.artifacts;
    w.row(r.sweep_case.case_id, spec.base.lambda_a, r.sweep_case.lambda_b, "ok", a.active_count,
          a.passive.passive.size(), a.passive.never_selected, a.never_losers.size(),
          a.classes.poor.money_share, a.classes.middle.money_share, a.classes.rich.money_share,
          a.classes.poor.population_share, a.classes.middle.population_share,
          a.classes.rich.population_share);
  }
  out.summary_path = spec.base.output_dir / "summary.csv";
  w.save(out.summary_path);
  return out;
}

struct DiagnosticsOptions {
  std::size_t spectrum_window = kDefaultSpectrumWindow;
  std::size_t occupancy_points = 1'000'000;
};

struct DiagnosticsArtifacts {
  OrbitStats occupancy;
  Spectrum spectrum;
  std::vector<ManifestEntry> files;
};

inline constexpr std::size_t kMinAttractorPoints = 2000;

// One orbit of max(n_points, window, occupancy_points) post-transient
// iterates: attractor.csv holds its first n_points, spectrum.csv the x
// spectrum of its last `window` samples, occupancy.csv the sub-space counts
// over its first occupancy_points.
inline DiagnosticsArtifacts emit_diagnostics(const MapParams& params, ChaoticState start,
                                             std::size_t n_points, std::uint64_t discard,
                                             const fs::path& output_dir,
                                             const DiagnosticsOptions& opts = {}) {
  if (n_points < kMinAttractorPoints) {
    throw std::invalid_argument("emit_diagnostics: need at least 2000 attractor points");
  }
  if (opts.occupancy_points < 1) throw std::invalid_argument("emit_diagnostics: occupancy_points");
  fs::create_directories(output_dir);
  const std::size_t len = std::max({n_points, opts.spectrum_window, opts.occupancy_points});
  const auto orbit = iterate(start, params, len, discard);
  const std::span<const ChaoticState> view(orbit);

  DiagnosticsArtifacts out;
  out.occupancy = occupancy_asymmetry(view.first(opts.occupancy_points));
  out.spectrum = power_spectrum(x_series(view), opts.spectrum_window);

  detail::ArtifactSink sink(output_dir);
  {
    csv::Writer w({"x", "y"});
    for (const auto& p : view.first(n_points)) w.row(p.x, p.y);
    sink.save("attractor.csv", w);
  }
  {
    csv::Writer w({"w", "magnitude"});
    for (std::size_t k = 0; k < out.spectrum.freqs.size(); ++k) {
      w.row(out.spectrum.freqs[k], out.spectrum.magnitudes[k]);
    }
    sink.save("spectrum.csv", w);
  }
  {
    const auto& o = out.occupancy;
    csv::Writer w({"n_points", "frac_x_gt_y", "frac_y_gt_x", "frac_diag"});
    w.row(o.n_points, o.frac_x_gt_y, o.frac_y_gt_x, o.frac_diag);
    sink.save("occupancy.csv", w);
  }
  out.files = sink.take();
  return out;
}

}  // namespace chaotic_market

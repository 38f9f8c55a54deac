// chaotic_market: command-line front end.
//
//   chaotic_market run      --config <file> | --preset desk|paper  [--out d] [--seed s]
//   chaotic_market sweep    --config <file> | --preset desk|paper  [--parallel k] [--out d] [--seed s]
//   chaotic_market diagnose --lambda-a v --lambda-b v [--points n] [--out d]

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "chaotic_market.hpp"

namespace cm = chaotic_market;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "configuration document (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "base settings: desk (N=500) or paper (N=5000)")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--out", o.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", o.seed, "rng seed (overrides rng_seed)");
}

std::string document_text(const CommonOptions& o) {
  if (o.config_path.empty()) {
    if (o.preset.empty()) throw CLI::ValidationError("need --config and/or --preset");
    return {};
  }
  return cm::csv::read_file(o.config_path);
}

std::optional<std::string_view> preset_of(const CommonOptions& o) {
  if (o.preset.empty()) return std::nullopt;
  return cm::preset_document(o.preset);
}

void apply_overrides(cm::ExperimentConfig& c, const CommonOptions& o) {
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.rng_seed = *o.seed;
  c.validate();
}

void print_classes(const cm::ClassBreakdown& cb) {
  std::printf("  population  poor %.4f  middle %.4f  rich %.4f\n", cb.poor.population_share,
              cb.middle.population_share, cb.rich.population_share);
  std::printf("  money       poor %.4f  middle %.4f  rich %.4f\n", cb.poor.money_share,
              cb.middle.money_share, cb.rich.money_share);
}

int cmd_run(const CommonOptions& o) {
  auto cfg = cm::load_config(document_text(o), preset_of(o));
  apply_overrides(cfg, o);
  const auto t0 = std::chrono::steady_clock::now();
  const auto art = cm::run_case(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& s = art.summary;
  std::printf("[%s] N=%zu T=%llu lambda=(%.6g, %.6g)\n", cfg.case_id.c_str(), cfg.n_agents,
              static_cast<unsigned long long>(s.total_steps), cfg.lambda_a, cfg.lambda_b);
  std::printf("  executed %llu  insufficient %llu  self %llu  conservation err %.3g\n",
              static_cast<unsigned long long>(s.executed),
              static_cast<unsigned long long>(s.skipped_insufficient),
              static_cast<unsigned long long>(s.skipped_self), s.relative_conservation_error);
  std::printf("  active %zu  passive %zu (never selected %zu)  never-losers %zu\n",
              art.active_count, art.passive.passive.size(), art.passive.never_selected,
              art.never_losers.size());
  print_classes(art.classes);
  for (const auto& f : art.fits) {
    std::printf("  fit %-11s parameter %.6g  range [%.6g, %.6g]  r2 %.4f%s\n",
                std::string(cm::to_string(f.model)).c_str(), f.parameter, f.fit_range.lo,
                f.fit_range.hi, f.r_squared, f.flagged ? "  (flagged)" : "");
  }
  std::fprintf(stderr, "%.3f s, %.3g transactions/s -> %s\n", secs,
               static_cast<double>(s.total_steps) / secs, art.dir.string().c_str());
  return 0;
}

int cmd_sweep(const CommonOptions& o, std::size_t parallel) {
  auto spec = cm::load_sweep_spec(document_text(o), preset_of(o));
  apply_overrides(spec.base, o);
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = cm::run_sweep(spec, parallel);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%-6s %-9s %7s %7s %8s %8s %8s %8s\n", "case", "lambda_b", "active", "passive",
              "mid_pop", "rich_pop", "mid_$", "rich_$");
  int failures = 0;
  for (const auto& r : summary.rows) {
    if (!r.ok) {
      ++failures;
      std::printf("%-6s %-9.6g FAILED: %s\n", r.sweep_case.case_id.c_str(), r.sweep_case.lambda_b,
                  r.error.c_str());
      continue;
    }
    const auto& a = *r.artifacts;
    std::printf("%-6s %-9.6g %7zu %7zu %8.4f %8.4f %8.4f %8.4f\n", r.sweep_case.case_id.c_str(),
                r.sweep_case.lambda_b, a.active_count, a.passive.passive.size(),
                a.classes.middle.population_share, a.classes.rich.population_share,
                a.classes.middle.money_share, a.classes.rich.money_share);
  }
  std::fprintf(stderr, "%zu cases in %.3f s (parallel %zu) -> %s\n", summary.rows.size(), secs,
               parallel, summary.summary_path.string().c_str());
  if (failures > 0) {
    std::fprintf(stderr, "%d case(s) failed\n", failures);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gas-like market simulator with chaotic agent selection"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run a single case and write its artifacts");
  add_common(run, run_opts);

  CommonOptions sweep_opts;
  std::size_t parallel = 1;
  auto* sweep = app.add_subcommand("sweep", "run every case of a sweep, writing summary.csv");
  add_common(sweep, sweep_opts);
  sweep->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);

  double lambda_a = 1.032;
  double lambda_b = 1.032;
  std::size_t points = cm::kMinAttractorPoints;
  std::uint64_t discard = cm::kDefaultMapDiscard;
  double x0 = cm::kDefaultMapStart.x;
  double y0 = cm::kDefaultMapStart.y;
  std::size_t window = cm::kDefaultSpectrumWindow;
  std::string diag_out = "diagnostics";
  auto* diag = app.add_subcommand("diagnose", "attractor points, x spectrum and occupancy");
  diag->add_option("--lambda-a", lambda_a)->required();
  diag->add_option("--lambda-b", lambda_b)->required();
  diag->add_option("--points", points, "attractor points (>= 2000)");
  diag->add_option("--discard", discard, "transient iterates");
  diag->add_option("--x0", x0);
  diag->add_option("--y0", y0);
  diag->add_option("--window", window, "spectrum window (power of two)");
  diag->add_option("--out", diag_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, parallel);
    if (*diag) {
      const cm::MapParams params(lambda_a, lambda_b);
      if (!params.in_chaotic_window()) {
        std::fprintf(stderr, "warning: parameters outside the chaotic window [%g, %g]\n",
                     cm::kChaoticWindowLow, cm::kChaoticWindowHigh);
      }
      cm::DiagnosticsOptions opts;
      opts.spectrum_window = window;
      const auto d = cm::emit_diagnostics(params, {x0, y0}, points, discard, diag_out, opts);
      const auto peak = d.spectrum.peak_index();
      std::printf("occupancy x>y %.6f  y>x %.6f  diag %.6f (n=%zu)\n", d.occupancy.frac_x_gt_y,
                  d.occupancy.frac_y_gt_x, d.occupancy.frac_diag, d.occupancy.n_points);
      std::printf("spectrum peak w=%.6g magnitude %.6g\n", d.spectrum.freqs[peak],
                  d.spectrum.magnitudes[peak]);
      return 0;
    }
  } catch (const cm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

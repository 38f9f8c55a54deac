#pragma once

// Experiment configuration documents.
//
// Grammar (UTF-8, one entry per line):
//
//   document := { line '\n' }
//   line     := blank | comment | key ws? '=' ws? value ws? comment?
//   comment  := '#' any*
//   key      := [a-z_]+
//
// Keys may appear once. Unknown keys are errors. A preset is a document
// that is parsed first; the user document overrides it key by key.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chaotic_market/chaos_core.hpp"
#include "chaotic_market/csv.hpp"
#include "chaotic_market/errors.hpp"
#include "chaotic_market/stats_analysis.hpp"

namespace chaotic_market {

inline constexpr std::uint64_t kTraceDefaultMaxSteps = 1'000'000;

struct ExperimentConfig {
  std::string case_id = "case";
  std::size_t n_agents = 500;
  double initial_money = 1000.0;
  std::optional<std::uint64_t> total_steps;  // absent: 2 N^2
  double lambda_a = 1.032;
  double lambda_b = 1.032;
  ChaoticState map_start = kDefaultMapStart;
  std::uint64_t map_discard = kDefaultMapDiscard;
  std::uint64_t rng_seed = 1;
  ClassBounds class_bounds;
  std::filesystem::path output_dir = "out";
  std::optional<bool> emit_trace;  // absent: on iff steps() <= 1e6
  double exp_fit_min_prob = 0.01;
  double pareto_threshold = 2000.0;
  std::optional<double> pareto_break;  // splits the tail into two fits
  std::size_t histogram_bins = 60;
  double histogram_max = 6000.0;

  std::uint64_t steps() const {
    return total_steps.value_or(2 * static_cast<std::uint64_t>(n_agents) * n_agents);
  }
  bool trace_enabled() const { return emit_trace.value_or(steps() <= kTraceDefaultMaxSteps); }

  MarketConfig market() const { return {n_agents, initial_money}; }
  MapParams map_params() const { return {lambda_a, lambda_b}; }

  // Throws ConfigError naming the first violated precondition.
  void validate() const {
    const auto fail = [](const char* field, const std::string& msg) {
      throw ConfigError(field, 0, msg);
    };
    if (case_id.empty() ||
        !std::all_of(case_id.begin(), case_id.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        })) {
      fail("case_id", "must be non-empty and use only [A-Za-z0-9_.-]");
    }
    if (n_agents < 2) fail("n_agents", "must be >= 2");
    if (!(std::isfinite(initial_money) && initial_money > 0.0)) fail("initial_money", "must be > 0");
    if (total_steps && *total_steps < 1) fail("total_steps", "must be >= 1");
    if (!(std::isfinite(lambda_a) && lambda_a > 0.0)) fail("lambda_a", "must be finite and > 0");
    if (!(std::isfinite(lambda_b) && lambda_b > 0.0)) fail("lambda_b", "must be finite and > 0");
    if (!map_start.valid()) fail("map_start_x", "map start must lie in [0,1]^2");
    if (!(class_bounds.poor_upper > 0.0)) fail("poor_upper", "must be > 0");
    if (!(class_bounds.poor_upper < class_bounds.middle_upper)) {
      fail("middle_upper", "must be > poor_upper");
    }
    if (output_dir.empty()) fail("output_dir", "must be non-empty");
    if (!(exp_fit_min_prob > 0.0 && exp_fit_min_prob < 1.0)) {
      fail("exp_fit_min_prob", "must be in (0,1)");
    }
    if (!(std::isfinite(pareto_threshold) && pareto_threshold > 0.0)) {
      fail("pareto_threshold", "must be > 0");
    }
    if (pareto_break && !(*pareto_break > pareto_threshold)) {
      fail("pareto_break", "must be > pareto_threshold");
    }
    if (histogram_bins < 1) fail("histogram_bins", "must be >= 1");
    if (!(histogram_max > 0.0)) fail("histogram_max", "must be > 0");
  }
};

// Named presets, as documents. "desk" is CI-sized; "paper" is the N = 5000,
// T = 5e7 protocol.
inline std::optional<std::string_view> preset_document(std::string_view name) {
  static constexpr std::string_view kDesk =
      "n_agents = 500\n"
      "initial_money = 1000\n"
      "lambda_a = 1.032\n"
      "lambda_b = 1.032\n"
      "rng_seed = 1\n";
  static constexpr std::string_view kPaper =
      "n_agents = 5000\n"
      "initial_money = 1000\n"
      "lambda_a = 1.032\n"
      "lambda_b = 1.032\n"
      "rng_seed = 1\n"
      "emit_trace = false\n";
  if (name == "desk") return kDesk;
  if (name == "paper") return kPaper;
  return std::nullopt;
}

namespace detail {

struct RawEntry {
  std::string value;
  std::size_t line = 0;
};

using RawDocument = std::map<std::string, RawEntry, std::less<>>;

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline RawDocument parse_document(std::string_view text) {
  RawDocument doc;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", line_no, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
          return (c >= 'a' && c <= 'z') || c == '_';
        })) {
      throw ConfigError(key, line_no, "malformed key");
    }
    if (value.empty()) throw ConfigError(key, line_no, "missing value");
    if (doc.contains(key)) throw ConfigError(key, line_no, "duplicate key");
    doc.emplace(key, RawEntry{value, line_no});
  }
  return doc;
}

inline const std::set<std::string, std::less<>>& config_keys() {
  static const std::set<std::string, std::less<>> keys{
      "case_id",       "n_agents",         "initial_money",    "total_steps",
      "lambda_a",      "lambda_b",         "map_start_x",      "map_start_y",
      "map_discard",   "rng_seed",         "poor_upper",       "middle_upper",
      "output_dir",    "emit_trace",       "exp_fit_min_prob", "pareto_threshold",
      "pareto_break",  "histogram_bins",   "histogram_max"};
  return keys;
}

class FieldReader {
 public:
  explicit FieldReader(const RawDocument& doc) : doc_(doc) {}

  template <class T>
  void number(std::string_view key, T& out) const {
    const auto* e = find(key);
    if (!e) return;
    if (!csv::parse_number(e->value, out)) {
      throw ConfigError(std::string(key), e->line, "not a valid number: '" + e->value + "'");
    }
  }

  template <class T>
  void number(std::string_view key, std::optional<T>& out) const {
    if (!find(key)) return;
    T v{};
    number(key, v);
    out = v;
  }

  void text(std::string_view key, std::string& out) const {
    if (const auto* e = find(key)) out = e->value;
  }

  void boolean(std::string_view key, std::optional<bool>& out) const {
    const auto* e = find(key);
    if (!e) return;
    if (e->value == "true" || e->value == "1") {
      out = true;
    } else if (e->value == "false" || e->value == "0") {
      out = false;
    } else {
      throw ConfigError(std::string(key), e->line, "expected true/false, got '" + e->value + "'");
    }
  }

 private:
  const RawEntry* find(std::string_view key) const {
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &it->second;
  }

  const RawDocument& doc_;
};

inline ExperimentConfig build_config(const RawDocument& doc) {
  ExperimentConfig c;
  const FieldReader r(doc);
  r.text("case_id", c.case_id);
  r.number("n_agents", c.n_agents);
  r.number("initial_money", c.initial_money);
  r.number("total_steps", c.total_steps);
  r.number("lambda_a", c.lambda_a);
  r.number("lambda_b", c.lambda_b);
  r.number("map_start_x", c.map_start.x);
  r.number("map_start_y", c.map_start.y);
  r.number("map_discard", c.map_discard);
  r.number("rng_seed", c.rng_seed);
  r.number("poor_upper", c.class_bounds.poor_upper);
  r.number("middle_upper", c.class_bounds.middle_upper);
  std::string out_dir = c.output_dir.string();
  r.text("output_dir", out_dir);
  c.output_dir = out_dir;
  r.boolean("emit_trace", c.emit_trace);
  r.number("exp_fit_min_prob", c.exp_fit_min_prob);
  r.number("pareto_threshold", c.pareto_threshold);
  r.number("pareto_break", c.pareto_break);
  r.number("histogram_bins", c.histogram_bins);
  r.number("histogram_max", c.histogram_max);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    const auto it = doc.find(e.field());
    if (it == doc.end() || e.line() != 0) throw;
    throw ConfigError(e.field(), it->second.line, e.message());
  }
  return c;
}

// Merges the preset (if any) under the user document; `extra_keys` are
// accepted in addition to the config keys and removed from the result.
inline RawDocument merged_document(std::string_view text, std::optional<std::string_view> preset,
                                   const std::set<std::string, std::less<>>& extra_keys,
                                   RawDocument* extras) {
  RawDocument doc = parse_document(text);
  for (const auto& [key, entry] : doc) {
    if (!config_keys().contains(key) && !extra_keys.contains(key)) {
      throw ConfigError(key, entry.line, "unknown key");
    }
  }
  if (extras) {
    for (auto it = doc.begin(); it != doc.end();) {
      if (extra_keys.contains(it->first)) {
        extras->insert(*it);
        it = doc.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (preset) {
    for (auto& [key, entry] : parse_document(*preset)) doc.try_emplace(key, entry);
  } else {
    for (const char* req : {"n_agents", "initial_money", "lambda_a", "lambda_b", "rng_seed"}) {
      if (!doc.contains(std::string_view(req))) throw ConfigError(req, 0, "required key missing");
    }
  }
  return doc;
}

}  // namespace detail

// Parses and validates a configuration document. Without a preset the keys
// n_agents, initial_money, lambda_a, lambda_b and rng_seed are required.
inline ExperimentConfig load_config(std::string_view text,
                                    std::optional<std::string_view> preset = std::nullopt) {
  return detail::build_config(detail::merged_document(text, preset, {}, nullptr));
}

// Canonical document for a config, with defaults spelled out. Loading it
// back yields a config with the same effective values.
inline std::string to_document(const ExperimentConfig& c) {
  using csv::format_number;
  std::string out;
  const auto kv = [&out](std::string_view k, const std::string& v) {
    out.append(k).append(" = ").append(v).append("\n");
  };
  kv("case_id", c.case_id);
  kv("n_agents", format_number(c.n_agents));
  kv("initial_money", format_number(c.initial_money));
  kv("total_steps", format_number(c.steps()));
  kv("lambda_a", format_number(c.lambda_a));
  kv("lambda_b", format_number(c.lambda_b));
  kv("map_start_x", format_number(c.map_start.x));
  kv("map_start_y", format_number(c.map_start.y));
  kv("map_discard", format_number(c.map_discard));
  kv("rng_seed", format_number(c.rng_seed));
  kv("poor_upper", format_number(c.class_bounds.poor_upper));
  kv("middle_upper", format_number(c.class_bounds.middle_upper));
  kv("output_dir", c.output_dir.generic_string());
  kv("emit_trace", c.trace_enabled() ? "true" : "false");
  kv("exp_fit_min_prob", format_number(c.exp_fit_min_prob));
  kv("pareto_threshold", format_number(c.pareto_threshold));
  if (c.pareto_break) kv("pareto_break", format_number(*c.pareto_break));
  kv("histogram_bins", format_number(c.histogram_bins));
  kv("histogram_max", format_number(c.histogram_max));
  return out;
}

struct SweepCase {
  std::string case_id;
  double lambda_b = 1.032;
};

// The eight lambda_b values of the reference sweep (lambda_a = 1.032).
inline std::vector<SweepCase> reference_cases() {
  return {{"1", 1.032},   {"2", 1.03781}, {"3", 1.04362}, {"4", 1.049430},
          {"5", 1.06105}, {"6", 1.07267}, {"7", 1.07848}, {"8", 1.08429}};
}

struct SweepSpec {
  ExperimentConfig base;
  std::vector<SweepCase> cases = reference_cases();

  void validate() const {
    base.validate();
    if (cases.empty()) throw ConfigError("cases", 0, "sweep needs at least one case");
    std::set<std::string_view> seen;
    for (const auto& c : cases) {
      if (!seen.insert(c.case_id).second) {
        throw ConfigError("cases", 0, "duplicate case id '" + c.case_id + "'");
      }
      ExperimentConfig probe = base;
      probe.case_id = c.case_id;
      probe.lambda_b = c.lambda_b;
      probe.validate();
    }
  }
};

// Same document format plus an optional `cases = id:lambda_b, id:lambda_b, ...`
// (default: the eight reference cases). lambda_b in the base is ignored.
inline SweepSpec load_sweep_spec(std::string_view text,
                                 std::optional<std::string_view> preset = std::nullopt) {
  detail::RawDocument extras;
  auto doc = detail::merged_document(text, preset, {"cases"}, &extras);
  SweepSpec spec{detail::build_config(doc)};
  if (const auto it = extras.find("cases"); it != extras.end()) {
    spec.cases.clear();
    std::string_view list = it->second.value;
    while (!list.empty()) {
      const auto comma = list.find(',');
      const auto item = detail::trim(list.substr(0, comma));
      list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
      const auto colon = item.find(':');
      SweepCase sc;
      if (colon == std::string_view::npos ||
          !csv::parse_number(detail::trim(item.substr(colon + 1)), sc.lambda_b)) {
        throw ConfigError("cases", it->second.line,
                          "expected id:lambda_b, got '" + std::string(item) + "'");
      }
      sc.case_id = std::string(detail::trim(item.substr(0, colon)));
      spec.cases.push_back(std::move(sc));
    }
  }
  spec.validate();
  return spec;
}

}  // namespace chaotic_market

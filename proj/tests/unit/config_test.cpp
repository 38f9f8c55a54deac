#include <gtest/gtest.h>

#include <string>

#include "chaotic_market/config.hpp"

using namespace chaotic_market;

namespace {

constexpr const char* kMinimal =
    "n_agents = 5000\n"
    "initial_money = 1000\n"
    "lambda_a = 1.032\n"
    "lambda_b = 1.032\n"
    "rng_seed = 1\n";

ConfigError config_error(std::string_view text,
                         std::optional<std::string_view> preset = std::nullopt) {
  try {
    load_config(text, preset);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError for:\n" << text;
  return ConfigError("", 0, "");
}

}  // namespace

TEST(LoadConfig, MinimalDocumentDefaultsTotalSteps) {
  const auto c = load_config(kMinimal);
  EXPECT_EQ(c.n_agents, 5000u);
  EXPECT_EQ(c.steps(), 50'000'000u);
  EXPECT_EQ(c.map_start, kDefaultMapStart);
  EXPECT_EQ(c.map_discard, 1000u);
  EXPECT_EQ(c.class_bounds.poor_upper, 500.0);
  EXPECT_EQ(c.class_bounds.middle_upper, 2000.0);
  EXPECT_FALSE(c.trace_enabled());  // 5e7 steps: full scale
}

TEST(LoadConfig, DeskScaleTracesByDefault) {
  const auto c = load_config("", preset_document("desk"));
  EXPECT_EQ(c.n_agents, 500u);
  EXPECT_EQ(c.steps(), 500'000u);
  EXPECT_TRUE(c.trace_enabled());
}

TEST(LoadConfig, PaperPreset) {
  const auto c = load_config("", preset_document("paper"));
  EXPECT_EQ(c.n_agents, 5000u);
  EXPECT_EQ(c.steps(), 50'000'000u);
  EXPECT_FALSE(c.trace_enabled());
}

TEST(LoadConfig, DocumentOverridesPreset) {
  const auto c = load_config("n_agents = 100\nlambda_b = 1.08429\n", preset_document("desk"));
  EXPECT_EQ(c.n_agents, 100u);
  EXPECT_EQ(c.steps(), 20'000u);  // recomputed from the overriding N
  EXPECT_EQ(c.lambda_b, 1.08429);
  EXPECT_EQ(c.rng_seed, 1u);
}

TEST(LoadConfig, CommentsBlankLinesAndAllKeys) {
  const auto c = load_config(
      "# sweep base\n"
      "\n"
      "case_id = eight   # trailing comment\n"
      "n_agents=50\n"
      "initial_money = 10.5\n"
      "total_steps = 1234\n"
      "lambda_a = 1.04\n"
      "lambda_b = 1.05\n"
      "map_start_x = 0.25\n"
      "map_start_y = 0.125\n"
      "map_discard = 7\n"
      "rng_seed = 18446744073709551615\n"
      "poor_upper = 5\n"
      "middle_upper = 20\n"
      "output_dir = results/x\n"
      "emit_trace = false\n"
      "exp_fit_min_prob = 0.05\n"
      "pareto_threshold = 30\n"
      "pareto_break = 300\n"
      "histogram_bins = 12\n"
      "histogram_max = 100\n");
  EXPECT_EQ(c.case_id, "eight");
  EXPECT_EQ(c.initial_money, 10.5);
  EXPECT_EQ(c.steps(), 1234u);
  EXPECT_EQ(c.map_start, (ChaoticState{0.25, 0.125}));
  EXPECT_EQ(c.rng_seed, 18446744073709551615ull);
  EXPECT_EQ(c.output_dir, std::filesystem::path("results/x"));
  EXPECT_FALSE(c.trace_enabled());
  ASSERT_TRUE(c.pareto_break.has_value());
  EXPECT_EQ(*c.pareto_break, 300.0);
  EXPECT_EQ(c.histogram_bins, 12u);
}

TEST(LoadConfig, NonNumericValueNamesField) {
  const auto e = config_error(
      "n_agents = 5000\ninitial_money = 1000\nlambda_a = 1.032\nlambda_b = abc\nrng_seed = 1\n");
  EXPECT_EQ(e.field(), "lambda_b");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_NE(std::string(e.what()).find("lambda_b"), std::string::npos);
}

TEST(LoadConfig, TrailingJunkIsRejected) {
  EXPECT_EQ(config_error("n_agents = 50x", preset_document("desk")).field(), "n_agents");
  EXPECT_EQ(config_error("n_agents = -5", preset_document("desk")).field(), "n_agents");
}

TEST(LoadConfig, SingleAgentFailsValidation) {
  const auto e = config_error(
      "n_agents = 1\ninitial_money = 1000\nlambda_a = 1.032\nlambda_b = 1.032\nrng_seed = 1\n");
  EXPECT_EQ(e.field(), "n_agents");
  EXPECT_EQ(e.line(), 1u);
}

TEST(LoadConfig, UnknownKeyIsRejected) {
  const auto e = config_error(std::string(kMinimal) + "lamda_b = 1.05\n");
  EXPECT_EQ(e.field(), "lamda_b");
  EXPECT_EQ(e.line(), 6u);
}

TEST(LoadConfig, MissingRequiredKey) {
  EXPECT_EQ(config_error("n_agents = 10\ninitial_money = 1\nlambda_a = 1.032\nlambda_b = 1.032\n")
                .field(),
            "rng_seed");
}

TEST(LoadConfig, MalformedLines) {
  EXPECT_EQ(config_error("n_agents 10\n", preset_document("desk")).line(), 1u);
  EXPECT_EQ(config_error("# c\nn_agents =\n", preset_document("desk")).line(), 2u);
  EXPECT_EQ(config_error("n_agents = 3\nn_agents = 4\n", preset_document("desk")).line(), 2u);
  EXPECT_EQ(config_error("emit_trace = maybe\n", preset_document("desk")).field(), "emit_trace");
}

TEST(LoadConfig, ValidationErrors) {
  const auto desk = preset_document("desk");
  EXPECT_EQ(config_error("initial_money = 0\n", desk).field(), "initial_money");
  EXPECT_EQ(config_error("lambda_a = 0\n", desk).field(), "lambda_a");
  EXPECT_EQ(config_error("total_steps = 0\n", desk).field(), "total_steps");
  EXPECT_EQ(config_error("map_start_x = 1.5\n", desk).field(), "map_start_x");
  EXPECT_EQ(config_error("poor_upper = 3000\n", desk).field(), "middle_upper");
  EXPECT_EQ(config_error("pareto_break = 100\n", desk).field(), "pareto_break");
  EXPECT_EQ(config_error("case_id = a/b\n", desk).field(), "case_id");
}

TEST(LoadConfig, CanonicalDocumentRoundTrips) {
  auto c = load_config("n_agents = 77\nlambda_b = 1.0734567891234567\npareto_break = 5000\n",
                       preset_document("desk"));
  const auto again = load_config(to_document(c));
  EXPECT_EQ(to_document(again), to_document(c));
  EXPECT_EQ(again.lambda_b, c.lambda_b);
  EXPECT_EQ(again.steps(), c.steps());
  EXPECT_EQ(again.trace_enabled(), c.trace_enabled());
}

TEST(SweepSpecTest, DefaultsToReferenceCases) {
  const auto s = load_sweep_spec("", preset_document("desk"));
  ASSERT_EQ(s.cases.size(), 8u);
  EXPECT_EQ(s.cases.front().lambda_b, 1.032);
  EXPECT_EQ(s.cases.back().lambda_b, 1.08429);
  EXPECT_EQ(s.cases[4].case_id, "5");
}

TEST(SweepSpecTest, ExplicitCases) {
  const auto s = load_sweep_spec("cases = a:1.032, b : 1.05,c:1.08\n", preset_document("desk"));
  ASSERT_EQ(s.cases.size(), 3u);
  EXPECT_EQ(s.cases[1].case_id, "b");
  EXPECT_EQ(s.cases[1].lambda_b, 1.05);
}

TEST(SweepSpecTest, Errors) {
  const auto desk = preset_document("desk");
  EXPECT_THROW(load_sweep_spec("cases = a:1.0, a:1.1\n", desk), ConfigError);
  EXPECT_THROW(load_sweep_spec("cases = a=1.0\n", desk), ConfigError);
  EXPECT_THROW(load_sweep_spec("cases = a:-1\n", desk), ConfigError);
  // `cases` is only meaningful for sweeps.
  EXPECT_THROW(load_config("cases = a:1.0\n", desk), ConfigError);
}

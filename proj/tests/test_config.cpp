#include "bds/config.hpp"

#include <gtest/gtest.h>

namespace {

using nlohmann::json;

TEST(HarnessConfig, DefaultsResolveToBenchmark) {
  const auto c = bds::parse_harness_config("");
  EXPECT_EQ(c.oracle, "takeoff-highjump");
  EXPECT_EQ(c.bds.n_init, 3u);
  EXPECT_EQ(c.bds.n_exp, 3u);
  EXPECT_EQ(c.bds.n_opt, 3u);
  EXPECT_EQ(c.bds.total_samples, 10u);
  EXPECT_EQ(c.bds.acquisition.n_mc, 256u);
  EXPECT_EQ(c.bds.n_mc_rank, 4096u);
  EXPECT_EQ(c.bds.direct.budget.max_evals, 500u);
  EXPECT_EQ(c.bds.lbfgs.restarts, 16u);
  EXPECT_EQ(c.seeds.size(), 20u);
  EXPECT_FALSE(c.bds.use_ucb);
  const auto o = bds::make_oracle(c);
  const auto b = bds::resolve_bds_config(c, o);
  EXPECT_TRUE(b.bounds == o.bounds());
  EXPECT_TRUE(b.metric == o.metric());
}

TEST(HarnessConfig, RoundTripsThroughJson) {
  auto c = bds::parse_harness_config(R"({"oracle": "takeoff-obstacle", "seed": 4, "budget": 7,
                                         "acquisition": {"n_mc": 128}, "compare": {"budgets": [0, 7]}})");
  EXPECT_EQ(c.oracle, "takeoff-obstacle");
  EXPECT_EQ(c.bds.seed, 4u);
  EXPECT_EQ(c.bds.total_samples, 7u);
  EXPECT_EQ(c.bds.acquisition.n_mc, 128u);
  EXPECT_EQ(c.budgets, (std::vector<std::size_t>{0, 7}));
  const json doc = bds::to_json(c);
  EXPECT_EQ(bds::to_json(bds::harness_config_from_json(doc)), doc);
}

TEST(HarnessConfig, OverridesMergeOverFile) {
  const auto c = bds::parse_harness_config(R"({"seed": 1, "budget": 4})", json{{"seed", 9}});
  EXPECT_EQ(c.bds.seed, 9u);
  EXPECT_EQ(c.bds.total_samples, 4u);
}

TEST(HarnessConfig, BadFieldReportsPathAndLine) {
  try {
    bds::parse_harness_config("{\n  \"acquisition\": {\n    \"n_mc\": -3\n  }\n}");
    FAIL();
  } catch (const bds::ConfigError& e) {
    EXPECT_EQ(e.field(), "acquisition.n_mc");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(HarnessConfig, SyntaxErrorReportsLine) {
  try {
    bds::parse_harness_config("{\n  \"seed\": 1,\n  \"budget\": ,\n}");
    FAIL();
  } catch (const bds::ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(HarnessConfig, RejectsUnknownFieldsAndBadValues) {
  EXPECT_THROW(bds::parse_harness_config(R"({"sede": 1})"), bds::ConfigError);
  EXPECT_THROW(bds::parse_harness_config(R"({"lbfgs": {"restart": 2}})"), bds::ConfigError);
  EXPECT_THROW(bds::parse_harness_config(R"({"n_init": 0})"), bds::ConfigError);
  EXPECT_THROW(bds::parse_harness_config(R"({"schema_version": 2})"), bds::ConfigError);
  EXPECT_THROW(bds::parse_harness_config(R"({"cluster_threshold": 0})"), bds::ConfigError);
  EXPECT_THROW(bds::parse_harness_config(R"([1, 2])"), bds::ConfigError);
  EXPECT_THROW(bds::make_oracle(bds::parse_harness_config(R"({"oracle": "pole-vault"})")), bds::ConfigError);
  EXPECT_THROW(bds::make_oracle(bds::parse_harness_config(R"({"oracle": "synthetic:/no/such/file"})")),
               bds::ConfigError);
}

TEST(HarnessConfig, FeatureNoiseOverride) {
  const auto c = bds::parse_harness_config(R"({"feature_noise": 0})");
  EXPECT_EQ(bds::make_oracle(c).feature_noise(), 0.0);
}

TEST(HarnessConfig, BoundsOverrideMustMatchOracle) {
  const auto c = bds::parse_harness_config(R"({"bounds": {"lower": [0, 0], "upper": [1, 1]}})");
  EXPECT_THROW(bds::resolve_bds_config(c, bds::make_oracle(c)), bds::ConfigError);
}

}  // namespace

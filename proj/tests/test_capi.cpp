// Drives the shared library through its C header only.
#include "bds/bds.h"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Str {
  char* p = nullptr;
  ~Str() { bds_string_free(p); }
  json parse() const { return json::parse(p); }
};

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path dir = fs::temp_directory_path() / "bds_tests" / info->test_suite_name() / info->name();
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Keeps runs quick; the values are still the full pipeline.
const char* kFastConfig = R"({"budget": 4, "seed": 3, "acquisition": {"n_mc": 64, "n_mc_rank": 256},
                              "direct": {"max_evals": 100}, "lbfgs": {"restarts": 4}})";

TEST(CApiBasics, VersionAndStatusNames) {
  EXPECT_STREQ(bds_version(), "0.1.0");
  EXPECT_STREQ(bds_status_name(BDS_OK), "ok");
  EXPECT_STRNE(bds_status_name(BDS_ERR_CONFIG), bds_status_name(BDS_ERR_IO));
  bds_string_free(nullptr);
}

TEST(CApiBasics, NullArgumentsReported) {
  EXPECT_EQ(bds_gp_create(1, nullptr, nullptr, 1, nullptr, nullptr, nullptr), BDS_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(bds_last_error()), "");
  double out = 0;
  EXPECT_EQ(bds_naturalness_reward(1.0, 0.0, &out), BDS_ERR_INVALID_ARGUMENT);
}

TEST(CApiGp, PosteriorAndSnapshot) {
  const double lo[2] = {0, 0}, hi[2] = {2, 1}, flo[1] = {0}, fhi[1] = {4};
  bds_gp* gp = nullptr;
  ASSERT_EQ(bds_gp_create(2, lo, hi, 1, flo, fhi, &gp), BDS_OK);
  double mean = 0, var = 0;
  const double q[2] = {1.0, 0.5};
  ASSERT_EQ(bds_gp_posterior(gp, q, &mean, &var), BDS_OK);
  EXPECT_EQ(mean, 2.0);
  const double lambda[2] = {2.0, 2.0};
  ASSERT_EQ(bds_gp_set_params(gp, 1.0, lambda, 0.0), BDS_OK);
  const double x[2] = {1.0, 0.5}, f[1] = {3.0};
  ASSERT_EQ(bds_gp_add_observation(gp, x, f), BDS_OK);
  ASSERT_EQ(bds_gp_posterior(gp, q, &mean, &var), BDS_OK);
  EXPECT_NEAR(mean, 3.0, 1e-9);
  EXPECT_NEAR(var, 0.0, 1e-9);
  const double outside[2] = {5.0, 0.5};
  EXPECT_EQ(bds_gp_add_observation(gp, outside, f), BDS_ERR_INVALID_ARGUMENT);
  size_t n = 0;
  ASSERT_EQ(bds_gp_size(gp, &n), BDS_OK);
  EXPECT_EQ(n, 1u);

  Str doc;
  ASSERT_EQ(bds_gp_to_json(gp, &doc.p), BDS_OK);
  bds_gp* copy = nullptr;
  ASSERT_EQ(bds_gp_from_json(doc.p, &copy), BDS_OK);
  double m2 = 0, v2 = 0;
  const double q2[2] = {0.3, 0.9};
  bds_gp_posterior(gp, q2, &mean, &var);
  bds_gp_posterior(copy, q2, &m2, &v2);
  EXPECT_EQ(mean, m2);
  EXPECT_EQ(var, v2);
  bds_gp_destroy(copy);
  bds_gp_destroy(gp);
  EXPECT_EQ(bds_gp_from_json("{", &copy), BDS_ERR_INVALID_ARGUMENT);
}

TEST(CApiGp, FitImprovesOrKeeps) {
  const double lo[1] = {0}, hi[1] = {1}, flo[1] = {0}, fhi[1] = {1};
  bds_gp* gp = nullptr;
  ASSERT_EQ(bds_gp_create(1, lo, hi, 1, flo, fhi, &gp), BDS_OK);
  for (int i = 0; i < 8; ++i) {
    const double x[1] = {i / 7.0}, f[1] = {std::sin(3.0 * x[0])};
    ASSERT_EQ(bds_gp_update(gp, x, f, 1), BDS_OK);
  }
  int improved = -1;
  ASSERT_EQ(bds_gp_fit(gp, 2, &improved), BDS_OK);
  EXPECT_TRUE(improved == 0 || improved == 1);
  double theta = 0, lambda = 0, eta = 0;
  ASSERT_EQ(bds_gp_get_params(gp, &theta, &lambda, &eta), BDS_OK);
  EXPECT_GT(theta, 0);
  EXPECT_GT(lambda, 0);
  bds_gp_destroy(gp);
}

TEST(CApiKernels, MaternSelfAndAcquisition) {
  const double x[3] = {0.1, 0.2, 0.3}, l[3] = {1, 2, 3};
  double k = 0;
  ASSERT_EQ(bds_matern52(x, x, 3, 1.7, l, &k), BDS_OK);
  EXPECT_EQ(k, 1.7);
  int explore = -1;
  const char* want = "EEEOOOEEEOOO";
  for (size_t t = 0; t < 12; ++t) {
    ASSERT_EQ(bds_phase_for_step(t, 3, 3, &explore), BDS_OK);
    EXPECT_EQ(explore ? 'E' : 'O', want[t]);
  }
  const double mean[1] = {0.3}, var[1] = {0.25}, obs[2] = {0.0, 1.0};
  double exact = 0, value = 0, se = 0;
  ASSERT_EQ(bds_diversity_value_exact_1d(0.3, 0.5, obs, 2, &exact), BDS_OK);
  ASSERT_EQ(bds_diversity_value_mc(mean, var, 1, obs, 2, BDS_METRIC_EUCLIDEAN, 0.0, 20000, 1, &value, &se), BDS_OK);
  EXPECT_NEAR(value, exact, 4 * se);
  EXPECT_EQ(bds_diversity_value_mc(mean, var, 1, obs, 0, BDS_METRIC_EUCLIDEAN, 0.0, 100, 1, &value, &se),
            BDS_ERR_INVALID_ARGUMENT);
}

TEST(CApiRewards, PublishedFormulas) {
  double r = 0;
  ASSERT_EQ(bds_naturalness_reward(24.0, 48.0, &r), BDS_OK);
  EXPECT_EQ(r, 0.75);
  ASSERT_EQ(bds_task_reward(1, 50.0, 0, &r), BDS_OK);
  EXPECT_NEAR(r, 0.7 * std::exp(-1.0), 1e-12);
  const double f[1] = {0.0}, existing[1] = {0.0};
  ASSERT_EQ(bds_novelty_reward(f, 1, existing, 1, 1.0, BDS_METRIC_ANGULAR, 2 * M_PI, &r), BDS_OK);
  EXPECT_EQ(r, 0.01);
  const double nov = 0.5;
  ASSERT_EQ(bds_stage_reward(0.8, 0.5, &nov, &r), BDS_OK);
  EXPECT_DOUBLE_EQ(r, 0.2);
  ASSERT_EQ(bds_stage_reward(0.8, 0.5, nullptr, &r), BDS_OK);
  EXPECT_DOUBLE_EQ(r, 0.4);
  const double w[2] = {1, 1}, wb[2] = {1, 1};
  ASSERT_EQ(bds_runup_reward_highjump(w, wb, 2, 1.0, 1.0, &r), BDS_OK);
  EXPECT_EQ(r, 1.0);
  ASSERT_EQ(bds_runup_reward_obstacle(w, wb, 2, &r), BDS_OK);
  EXPECT_EQ(r, 1.0);
}

TEST(CApiCurriculum, PresetsAndSchedules) {
  bds_curriculum_config hj{}, oj{};
  ASSERT_EQ(bds_curriculum_preset(BDS_TASK_HIGH_JUMP, &hj), BDS_OK);
  ASSERT_EQ(bds_curriculum_preset(BDS_TASK_OBSTACLE_JUMP, &oj), BDS_OK);
  double hz = 0, c = 0;
  ASSERT_EQ(bds_control_frequency(0.5, &hj, &hz), BDS_OK);
  ASSERT_EQ(bds_offset_penalty_coefficient(0.5, &hj, &c), BDS_OK);
  EXPECT_EQ(hz, 10.0);
  EXPECT_EQ(c, 48.0);
  ASSERT_EQ(bds_control_frequency(1.0, &hj, &hz), BDS_OK);
  ASSERT_EQ(bds_offset_penalty_coefficient(1.0, &hj, &c), BDS_OK);
  EXPECT_EQ(hz, 30.0);
  EXPECT_EQ(c, 15.0);
  ASSERT_EQ(bds_control_frequency(0.5, &oj, &hz), BDS_OK);
  ASSERT_EQ(bds_offset_penalty_coefficient(0.5, &oj, &c), BDS_OK);
  EXPECT_EQ(hz, 20.0);
  EXPECT_EQ(c, 31.5);
  bds_curriculum_state s{hj.z_min, 0.0}, next{};
  ASSERT_EQ(bds_curriculum_advance(&s, 31.0, &hj, &next), BDS_OK);
  EXPECT_DOUBLE_EQ(next.z, 0.51);
  EXPECT_EQ(next.accumulator, 0.0);
}

TEST(CApiConfig, ResolveFillsDefaultsAndReportsErrors) {
  Str out;
  ASSERT_EQ(bds_config_resolve(nullptr, R"({"seed": 5})", &out.p), BDS_OK);
  const json doc = out.parse();
  EXPECT_EQ(doc["seed"], 5);
  EXPECT_EQ(doc["oracle"], "takeoff-highjump");
  Str bad;
  EXPECT_EQ(bds_config_resolve("{\n \"acquisition\": {\"n_mc\": \"many\"}\n}", nullptr, &bad.p), BDS_ERR_CONFIG);
  const std::string msg = bds_last_error();
  EXPECT_NE(msg.find("acquisition.n_mc"), std::string::npos);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(CApiRun, SummaryAndDeterministicTrace) {
  Str a, b;
  ASSERT_EQ(bds_run(kFastConfig, scratch("a.jsonl").c_str(), &a.p), BDS_OK) << bds_last_error();
  ASSERT_EQ(bds_run(kFastConfig, scratch("b.jsonl").c_str(), &b.p), BDS_OK);
  const json s = a.parse();
  EXPECT_EQ(s["status"], "complete");
  EXPECT_EQ(s["samples"], 7);
  EXPECT_GE(s["distinct_strategies"].get<int>(), 1);
  EXPECT_EQ(s["modes_found"].size(), s["distinct_strategies"].get<std::size_t>());
  EXPECT_EQ(slurp(scratch("a.jsonl")), slurp(scratch("b.jsonl")));

  Str table;
  ASSERT_EQ(bds_report(scratch("a.jsonl").c_str(), &table.p), BDS_OK);
  EXPECT_NE(std::string(table.p).find("complete"), std::string::npos);
}

TEST(CApiRun, ResumeFromTruncatedTrace) {
  ASSERT_EQ(bds_run(kFastConfig, scratch("full.jsonl").c_str(), nullptr), BDS_OK);
  const std::string full = slurp(scratch("full.jsonl"));
  std::istringstream in(full);
  std::string line, cut;
  for (int i = 0; i < 6 && std::getline(in, line); ++i) cut += line + "\n";
  std::ofstream(scratch("cut.jsonl"), std::ios::binary) << cut;
  Str summary;
  ASSERT_EQ(bds_resume(nullptr, scratch("cut.jsonl").c_str(), nullptr, &summary.p), BDS_OK) << bds_last_error();
  EXPECT_EQ(slurp(scratch("cut.jsonl")), full);
  EXPECT_EQ(bds_resume(R"({"seed": 4})", scratch("cut.jsonl").c_str(), scratch("x.jsonl").c_str(), nullptr),
            BDS_ERR_TRACE);
  EXPECT_EQ(bds_resume(nullptr, scratch("missing.jsonl").c_str(), nullptr, nullptr), BDS_ERR_TRACE);
}

struct Counter {
  int calls = 0;
};

int stripes(void* user, const double* x, size_t dim, uint64_t, double* f, size_t fdim) {
  auto* c = static_cast<Counter*>(user);
  ++c->calls;
  if (dim != 2 || fdim != 1) return 1;
  if (c->calls == 5) return 7;  // one simulated crash
  f[0] = std::floor(3.0 * x[0]) / 3.0;
  return 0;
}

TEST(CApiRun, CallbackOracle) {
  const double flo[1] = {0}, fhi[1] = {1};
  const char* cfg = R"({"budget": 5, "bounds": {"lower": [0, 0], "upper": [1, 1]},
                        "acquisition": {"n_mc": 32, "n_mc_rank": 64}, "direct": {"max_evals": 60},
                        "lbfgs": {"restarts": 2}})";
  Counter counter;
  Str summary;
  ASSERT_EQ(bds_run_with_oracle(cfg, 2, 1, flo, fhi, stripes, &counter, scratch("cb.jsonl").c_str(), &summary.p),
            BDS_OK)
      << bds_last_error();
  EXPECT_EQ(counter.calls, 8);
  EXPECT_EQ(summary.parse()["failed"], 1);
  EXPECT_EQ(bds_run_with_oracle(R"({"budget": 1})", 2, 1, flo, fhi, stripes, &counter, nullptr, nullptr),
            BDS_ERR_CONFIG);
  EXPECT_EQ(bds_resume(nullptr, scratch("cb.jsonl").c_str(), nullptr, nullptr), BDS_ERR_TRACE);
}

TEST(CApiCompare, WritesReportAndFlagsFailures) {
  const auto report = scratch("report.json");
  const char* cfg = R"({"acquisition": {"n_mc": 64, "n_mc_rank": 256}, "direct": {"max_evals": 100},
                        "lbfgs": {"restarts": 4}, "compare": {"budgets": [0, 3], "seeds": [0, 1], "threads": 1}})";
  Str summary;
  ASSERT_EQ(bds_compare(cfg, report.c_str(), &summary.p), BDS_OK) << bds_last_error();
  const json s = summary.parse();
  EXPECT_EQ(s["failed_fraction"], 0.0);
  EXPECT_EQ(s["aggregate"].size(), 4u);
  EXPECT_TRUE(fs::exists(report));
  auto csv = report;
  csv.replace_extension(".csv");
  EXPECT_TRUE(fs::exists(csv));

  Str again;
  ASSERT_EQ(bds_compare(cfg, scratch("again.json").c_str(), &again.p), BDS_OK);
  EXPECT_EQ(slurp(report), slurp(scratch("again.json")));
}

TEST(CApiCompare, UnreadableOracleIsAConfigError) {
  Str summary;
  EXPECT_EQ(bds_compare(R"({"oracle": "synthetic:/nonexistent.json"})", scratch("r.json").c_str(), &summary.p),
            BDS_ERR_CONFIG);
}

}  // namespace

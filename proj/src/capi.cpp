#include "bds/bds.h"

#include "bds/acquisition.hpp"
#include "bds/config.hpp"
#include "bds/curriculum.hpp"
#include "bds/gp.hpp"
#include "bds/harness.hpp"
#include "bds/rewards.hpp"
#include "bds/search.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <set>
#include <string>

struct bds_gp {
  bds::GpModel model;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

bds_status fail(bds_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

/// Maps the exception in flight to a status code.
bds_status translate() {
  try {
    throw;
  } catch (const bds::ConfigError& e) {
    return fail(BDS_ERR_CONFIG, e.what());
  } catch (const bds::TraceError& e) {
    return fail(BDS_ERR_TRACE, e.what());
  } catch (const bds::SurrogateError& e) {
    return fail(BDS_ERR_SURROGATE, e.what());
  } catch (const bds::OptimizerError& e) {
    return fail(BDS_ERR_OPTIMIZER, e.what());
  } catch (const bds::OracleError& e) {
    return fail(BDS_ERR_ORACLE, e.what());
  } catch (const bds::ContractError& e) {
    return fail(BDS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(BDS_ERR_IO, e.what());
  } catch (const json::exception& e) {
    return fail(BDS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(BDS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BDS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BDS_ERR_INTERNAL, "unknown error");
  }
}

template <class F>
bds_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (...) {
    return translate();
  }
}

#define BDS_REQUIRE_ARG(cond)                                                  \
  do {                                                                         \
    if (!(cond)) return fail(BDS_ERR_INVALID_ARGUMENT, "invalid argument: " #cond); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bds::Vector view(const double* p, std::size_t n) {
  return Eigen::Map<const bds::Vector>(p, static_cast<Eigen::Index>(n));
}

std::vector<bds::Vector> rows(const double* p, std::size_t n, std::size_t dim) {
  std::vector<bds::Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(view(p + i * dim, dim));
  return out;
}

bds::FeatureMetric metric_of(bds_metric m, double period) {
  if (m == BDS_METRIC_ANGULAR) {
    bds::require(period > 0.0, "angular period must be > 0");
    return bds::FeatureMetric::angular(period);
  }
  bds::require(m == BDS_METRIC_EUCLIDEAN, "unknown metric");
  return bds::FeatureMetric::euclidean();
}

bds::curriculum::CurriculumConfig curriculum_of(const bds_curriculum_config& c) {
  bds::require(c.task == BDS_TASK_HIGH_JUMP || c.task == BDS_TASK_OBSTACLE_JUMP, "unknown task kind");
  bds::curriculum::CurriculumConfig out{c.z_min, c.z_max, c.delta_z, c.r_threshold,
                                        c.task == BDS_TASK_HIGH_JUMP ? bds::curriculum::TaskKind::kHighJump
                                                                     : bds::curriculum::TaskKind::kObstacleJump};
  out.validate();
  return out;
}

bds::HarnessConfig parse_config(const char* text, const json& overrides = nullptr) {
  return bds::parse_harness_config(text ? std::string_view(text) : std::string_view(), overrides);
}

json summarize(const bds::BdsResult& result, const bds::FeatureMetric& metric, double threshold,
               const std::optional<std::filesystem::path>& trace_path, const bds::SyntheticOracle* oracle) {
  const auto& trace = result.trace;
  std::size_t failed = 0;
  for (const auto& r : trace.records) failed += r.ok() ? 0 : 1;
  json s = {{"status", trace.aborted ? "aborted" : "complete"},
            {"seed", trace.seed},
            {"samples", trace.records.size()},
            {"failed", failed},
            {"cluster_threshold", threshold},
            {"distinct_strategies", bds::distinct_strategies(result.features, metric, threshold).count}};
  if (trace.aborted) s["reason"] = trace.abort_reason;
  if (trace_path) s["trace"] = trace_path->string();
  if (oracle) {
    std::set<std::size_t> modes;
    json names = json::array();
    for (const auto& x : result.inputs) modes.insert(oracle->assign(x));
    for (std::size_t k : modes) names.push_back(oracle->modes()[k].name);
    s["oracle"] = oracle->name();
    s["modes_found"] = names;
  }
  return s;
}

json run_meta(const bds::HarnessConfig& config, const bds::SyntheticOracle& oracle) {
  return {{"oracle", config.oracle}, {"feature_noise", oracle.feature_noise()}};
}

void emit(char** out, const json& j) {
  if (out) *out = dup_string(j.dump(2));
}

/// Calls back into the host for each evaluation.
class CallbackOracle : public bds::Oracle {
 public:
  CallbackOracle(std::size_t input_dim, bds::Vector lo, bds::Vector hi, bds_oracle_fn fn, void* user)
      : input_dim_(input_dim), lo_(std::move(lo)), hi_(std::move(hi)), fn_(fn), user_(user) {}

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t feature_dim() const override { return static_cast<std::size_t>(lo_.size()); }
  bds::Vector feature_lo() const override { return lo_; }
  bds::Vector feature_hi() const override { return hi_; }
  bds::Vector evaluate(const bds::Vector& x, std::uint64_t call_seed) override {
    bds::Vector f = bds::Vector::Zero(lo_.size());
    const int rc = fn_(user_, x.data(), input_dim_, call_seed, f.data(), feature_dim());
    if (rc != 0) throw bds::OracleError("oracle callback reported failure (code " + std::to_string(rc) + ")");
    return f;
  }

 private:
  std::size_t input_dim_;
  bds::Vector lo_, hi_;
  bds_oracle_fn fn_;
  void* user_;
};

}  // namespace

extern "C" {

const char* bds_version(void) { return "0.1.0"; }

const char* bds_status_name(bds_status status) {
  switch (status) {
    case BDS_OK: return "ok";
    case BDS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BDS_ERR_CONFIG: return "config error";
    case BDS_ERR_SURROGATE: return "surrogate failure";
    case BDS_ERR_OPTIMIZER: return "optimizer failure";
    case BDS_ERR_ORACLE: return "oracle failure";
    case BDS_ERR_TRACE: return "trace error";
    case BDS_ERR_IO: return "i/o error";
    case BDS_ERR_RUN_FAILED: return "run failed";
    case BDS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bds_last_error(void) { return g_last_error.c_str(); }

void bds_string_free(char* s) { std::free(s); }

bds_status bds_gp_create(size_t input_dim, const double* lower, const double* upper, size_t feature_dim,
                         const double* feature_lo, const double* feature_hi, bds_gp** out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(out && lower && upper && feature_lo && feature_hi);
    BDS_REQUIRE_ARG(input_dim > 0 && feature_dim > 0);
    *out = nullptr;
    auto model = bds::GpModel::with_default_params(bds::BoxBounds(view(lower, input_dim), view(upper, input_dim)),
                                                   view(feature_lo, feature_dim), view(feature_hi, feature_dim));
    *out = new bds_gp{std::move(model)};
    return BDS_OK;
  });
}

void bds_gp_destroy(bds_gp* gp) { delete gp; }

bds_status bds_gp_size(const bds_gp* gp, size_t* observations) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp && observations);
    *observations = gp->model.size();
    return BDS_OK;
  });
}

bds_status bds_gp_set_params(bds_gp* gp, double theta, const double* lambda, double eta) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp && lambda);
    gp->model.set_hyperparameters({theta, view(lambda, gp->model.input_dim())}, eta);
    return BDS_OK;
  });
}

bds_status bds_gp_get_params(const bds_gp* gp, double* theta, double* lambda, double* eta) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp);
    const auto& p = gp->model.params();
    if (theta) *theta = p.theta;
    if (lambda) std::copy(p.lambda.data(), p.lambda.data() + p.lambda.size(), lambda);
    if (eta) *eta = gp->model.eta();
    return BDS_OK;
  });
}

bds_status bds_gp_add_observation(bds_gp* gp, const double* x, const double* f) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp && x && f);
    gp->model.add_observation(view(x, gp->model.input_dim()), view(f, gp->model.output_dim()));
    return BDS_OK;
  });
}

bds_status bds_gp_update(bds_gp* gp, const double* x, const double* f, uint64_t seed) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp && x && f);
    bds::update(gp->model, view(x, gp->model.input_dim()), view(f, gp->model.output_dim()), bds::RefitPolicy{},
                seed);
    return BDS_OK;
  });
}

bds_status bds_gp_fit(bds_gp* gp, uint64_t seed, int* improved) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp);
    const bds::HyperFit fit = bds::fit_hyperparameters(gp->model, bds::HyperBounds{}, seed);
    if (!fit.warning) gp->model.set_hyperparameters(fit.params, fit.eta);
    if (improved) *improved = fit.warning ? 0 : 1;
    return BDS_OK;
  });
}

bds_status bds_gp_posterior(const bds_gp* gp, const double* x, double* mean, double* variance) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp && x && mean && variance);
    const bds::PosteriorEstimate p = gp->model.posterior(view(x, gp->model.input_dim()));
    std::copy(p.mean.data(), p.mean.data() + p.mean.size(), mean);
    std::copy(p.variance.data(), p.variance.data() + p.variance.size(), variance);
    return BDS_OK;
  });
}

bds_status bds_gp_to_json(const bds_gp* gp, char** out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(gp && out);
    *out = dup_string(bds::to_json(gp->model).dump());
    return BDS_OK;
  });
}

bds_status bds_gp_from_json(const char* text, bds_gp** out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(text && out);
    *out = nullptr;
    *out = new bds_gp{bds::gp_from_json(json::parse(text))};
    return BDS_OK;
  });
}

bds_status bds_matern52(const double* x, const double* x2, size_t dim, double theta, const double* lambda,
                        double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(x && x2 && lambda && out && dim > 0);
    *out = bds::matern52(view(x, dim), view(x2, dim), {theta, view(lambda, dim)});
    return BDS_OK;
  });
}

bds_status bds_phase_for_step(size_t t, size_t n_exp, size_t n_opt, int* explore) {
  return guarded([&] {
    BDS_REQUIRE_ARG(explore);
    *explore = bds::phase_for_step(t, n_exp, n_opt) == bds::Phase::kExplore ? 1 : 0;
    return BDS_OK;
  });
}

bds_status bds_diversity_value_mc(const double* mean, const double* variance, size_t feature_dim,
                                  const double* observed, size_t n_observed, bds_metric metric, double period,
                                  size_t n_mc, uint64_t seed, double* value, double* std_error) {
  return guarded([&] {
    BDS_REQUIRE_ARG(mean && variance && observed && value && feature_dim > 0);
    const bds::PosteriorEstimate post{view(mean, feature_dim), view(variance, feature_dim)};
    bds::AcquisitionConfig cfg;
    cfg.n_mc = n_mc;
    cfg.rng_seed = seed;
    const auto obs = rows(observed, n_observed, feature_dim);
    const bds::McEstimate est = bds::diversity_value_mc(post, obs, metric_of(metric, period), cfg);
    *value = est.value;
    if (std_error) *std_error = est.std_error;
    return BDS_OK;
  });
}

bds_status bds_diversity_value_exact_1d(double mean, double sd, const double* observed, size_t n_observed,
                                        double* value) {
  return guarded([&] {
    BDS_REQUIRE_ARG(observed && value);
    *value = bds::diversity_value_exact_1d(mean, sd, std::vector<double>(observed, observed + n_observed));
    return BDS_OK;
  });
}

bds_status bds_novelty_reward(const double* f, size_t dim, const double* existing, size_t n_existing,
                              double d_threshold, bds_metric metric, double period, double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(f && out && dim > 0 && (existing || n_existing == 0));
    bds::rewards::NoveltyConfig cfg{d_threshold, metric_of(metric, period), rows(existing, n_existing, dim)};
    *out = bds::rewards::novelty_reward(view(f, dim), cfg);
    return BDS_OK;
  });
}

bds_status bds_naturalness_reward(double offset_l1, double c_offset, double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(out);
    *out = bds::rewards::naturalness_reward(offset_l1, {c_offset});
    return BDS_OK;
  });
}

bds_status bds_task_reward(int complete, double mean_root_angvel, int safe_landing, double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(out);
    *out = bds::rewards::task_reward(complete != 0, mean_root_angvel, safe_landing != 0);
    return BDS_OK;
  });
}

bds_status bds_stage_reward(double task, double naturalness, const double* novelty, double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(out);
    *out = bds::rewards::stage_reward(task, naturalness,
                                      novelty ? std::optional<double>(*novelty) : std::nullopt);
    return BDS_OK;
  });
}

bds_status bds_runup_reward_highjump(const double* omega, const double* omega_target, size_t dim, double v_z,
                                     double v_z_target, double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(omega && omega_target && out && dim > 0);
    *out = bds::rewards::runup_reward_highjump(view(omega, dim), view(omega_target, dim), v_z, v_z_target);
    return BDS_OK;
  });
}

bds_status bds_runup_reward_obstacle(const double* omega, const double* omega_target, size_t dim, double* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(omega && omega_target && out && dim > 0);
    *out = bds::rewards::runup_reward_obstacle(view(omega, dim), view(omega_target, dim));
    return BDS_OK;
  });
}

bds_status bds_curriculum_preset(bds_task_kind task, bds_curriculum_config* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(out && (task == BDS_TASK_HIGH_JUMP || task == BDS_TASK_OBSTACLE_JUMP));
    const auto p = bds::curriculum::preset(task == BDS_TASK_HIGH_JUMP ? bds::curriculum::TaskKind::kHighJump
                                                                      : bds::curriculum::TaskKind::kObstacleJump);
    *out = {p.z_min, p.z_max, p.delta_z, p.r_threshold, task};
    return BDS_OK;
  });
}

bds_status bds_curriculum_advance(const bds_curriculum_state* state, double mean_reward,
                                  const bds_curriculum_config* config, bds_curriculum_state* out) {
  return guarded([&] {
    BDS_REQUIRE_ARG(state && config && out);
    const auto next = bds::curriculum::advance({state->z, state->accumulator}, mean_reward, curriculum_of(*config));
    *out = {next.z, next.accumulator};
    return BDS_OK;
  });
}

bds_status bds_control_frequency(double z, const bds_curriculum_config* config, double* hz) {
  return guarded([&] {
    BDS_REQUIRE_ARG(config && hz);
    *hz = bds::curriculum::control_frequency(z, curriculum_of(*config).task);
    return BDS_OK;
  });
}

bds_status bds_offset_penalty_coefficient(double z, const bds_curriculum_config* config, double* c_offset) {
  return guarded([&] {
    BDS_REQUIRE_ARG(config && c_offset);
    *c_offset = bds::curriculum::offset_penalty_coefficient(z, curriculum_of(*config).task);
    return BDS_OK;
  });
}

bds_status bds_config_resolve(const char* config_json, const char* overrides_json, char** resolved) {
  return guarded([&] {
    BDS_REQUIRE_ARG(resolved);
    json overrides = nullptr;
    if (overrides_json && *overrides_json) {
      try {
        overrides = json::parse(overrides_json);
      } catch (const json::parse_error& e) {
        throw bds::ConfigError("", std::string("overrides: ") + e.what());
      }
    }
    *resolved = dup_string(bds::to_json(parse_config(config_json, overrides)).dump(2));
    return BDS_OK;
  });
}

bds_status bds_run(const char* config_json, const char* trace_path, char** summary) {
  return guarded([&] {
    const bds::HarnessConfig config = parse_config(config_json);
    bds::SyntheticOracle oracle = bds::make_oracle(config);
    const bds::BdsConfig run = bds::resolve_bds_config(config, oracle);
    std::optional<std::filesystem::path> path;
    if (trace_path && *trace_path) path = trace_path;
    const bds::BdsResult result = bds::run_bds(oracle, run, path, run_meta(config, oracle));
    emit(summary, summarize(result, run.metric, config.cluster_threshold, path, &oracle));
    if (result.trace.aborted) return fail(BDS_ERR_RUN_FAILED, "run aborted: " + result.trace.abort_reason);
    return BDS_OK;
  });
}

bds_status bds_run_with_oracle(const char* config_json, size_t input_dim, size_t feature_dim,
                               const double* feature_lo, const double* feature_hi, bds_oracle_fn oracle_fn,
                               void* user, const char* trace_path, char** summary) {
  return guarded([&] {
    BDS_REQUIRE_ARG(oracle_fn && feature_lo && feature_hi && input_dim > 0 && feature_dim > 0);
    const bds::HarnessConfig config = parse_config(config_json);
    if (!config.bounds) throw bds::ConfigError("bounds", "required when the oracle is supplied by the caller");
    if (config.bounds->dim() != input_dim)
      throw bds::ConfigError("bounds", "dimension does not match input_dim");
    bds::BdsConfig run = config.bds;
    run.bounds = *config.bounds;
    run.metric = config.metric.value_or(bds::FeatureMetric::euclidean());
    CallbackOracle oracle(input_dim, view(feature_lo, feature_dim), view(feature_hi, feature_dim), oracle_fn, user);
    std::optional<std::filesystem::path> path;
    if (trace_path && *trace_path) path = trace_path;
    const bds::BdsResult result = bds::run_bds(oracle, run, path, json{{"oracle", "callback"}});
    emit(summary, summarize(result, run.metric, config.cluster_threshold, path, nullptr));
    if (result.trace.aborted) return fail(BDS_ERR_RUN_FAILED, "run aborted: " + result.trace.abort_reason);
    return BDS_OK;
  });
}

bds_status bds_resume(const char* config_json, const char* trace_path, const char* out_path, char** summary) {
  return guarded([&] {
    BDS_REQUIRE_ARG(trace_path && *trace_path);
    const bds::BdsTrace previous = bds::read_trace(trace_path);
    if (!previous.meta.is_object() || !previous.meta.contains("oracle") || !previous.meta["oracle"].is_string())
      throw bds::TraceError("trace does not name a built-in oracle; resume it through the C++ API");
    if (previous.meta["oracle"] == "callback")
      throw bds::TraceError("trace was produced with a caller-supplied oracle; resume it through the C++ API");

    // The recorded run, in config form; the caller's document patches it.
    bds::HarnessConfig recorded;
    recorded.oracle = previous.meta["oracle"].get<std::string>();
    if (previous.meta.contains("feature_noise")) recorded.feature_noise = previous.meta["feature_noise"].get<double>();
    recorded.bds = bds::bds_config_from_json(previous.config);
    recorded.bounds = recorded.bds.bounds;
    recorded.metric = recorded.bds.metric;
    json doc = bds::to_json(recorded);
    if (config_json && *config_json) {
      json patch;
      try {
        patch = json::parse(config_json);
      } catch (const json::parse_error& e) {
        throw bds::ConfigError("", std::string("syntax error: ") + e.what());
      }
      doc.merge_patch(patch);
    }
    const bds::HarnessConfig config = bds::harness_config_from_json(doc);
    bds::SyntheticOracle oracle = bds::make_oracle(config);
    const bds::BdsConfig run = bds::resolve_bds_config(config, oracle);
    std::optional<std::filesystem::path> out;
    if (out_path && *out_path) out = out_path;
    const bds::BdsResult result = bds::resume_bds(trace_path, oracle, run, out);
    emit(summary, summarize(result, run.metric, config.cluster_threshold, out.value_or(trace_path), &oracle));
    if (result.trace.aborted) return fail(BDS_ERR_RUN_FAILED, "run aborted: " + result.trace.abort_reason);
    return BDS_OK;
  });
}

bds_status bds_compare(const char* config_json, const char* report_path, char** summary) {
  return guarded([&] {
    const bds::HarnessConfig config = parse_config(config_json);
    const bds::SyntheticOracle oracle = bds::make_oracle(config);
    try {
      oracle.validate(config.cluster_threshold);
    } catch (const bds::ContractError& e) {
      throw bds::ConfigError("cluster_threshold", e.what());
    }
    const bds::BdsConfig base = bds::resolve_bds_config(config, oracle);
    bds::ComparisonOptions options;
    options.budgets = config.budgets;
    options.seeds = config.seeds;
    options.cluster_threshold = config.cluster_threshold;
    options.threads = config.threads;
    if (config.trace_dir) options.trace_dir = *config.trace_dir;
    const bds::ComparisonReport report = bds::run_comparison(
        [&] { return std::make_unique<bds::SyntheticOracle>(oracle); }, config.oracle, base, options);
    if (report_path && *report_path) bds::write_report(report, report_path);

    json s = bds::to_json(report);
    s.erase("runs");
    s["failed_fraction"] = report.failed_fraction();
    if (report_path && *report_path) s["report"] = report_path;
    emit(summary, s);
    if (report.failed_fraction() > 0.1)
      return fail(BDS_ERR_RUN_FAILED, "more than 10% of comparison cells failed");
    return BDS_OK;
  });
}

bds_status bds_report(const char* trace_path, char** text) {
  return guarded([&] {
    BDS_REQUIRE_ARG(trace_path && text);
    *text = dup_string(bds::format_trace_table(bds::read_trace(trace_path)));
    return BDS_OK;
  });
}

}  // extern "C"

#include "bds/search.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace bds {
namespace {

using Clock = std::chrono::steady_clock;

/// Shared state of a run; used both for fresh runs and for resumption.
class Runner {
 public:
  Runner(Oracle& oracle, const BdsConfig& config, const nlohmann::json& meta)
      : oracle_(oracle),
        config_(config),
        model_(GpModel::with_default_params(config.bounds, oracle.feature_lo(),
                                            oracle.feature_hi())) {
    trace_.seed = config.seed;
    trace_.config = to_json(config);
    trace_.meta = meta;
    trace_.feature_lo = oracle.feature_lo();
    trace_.feature_hi = oracle.feature_hi();
  }

  BdsTrace& trace() { return trace_; }
  const GpModel& model() const { return model_; }

  void open(const std::filesystem::path& path) {
    out_.open(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out_) throw TraceError("cannot open trace file for writing: " + path.string());
    emit(trace_header_line(trace_));
  }

  /// Replays a recorded query without calling the oracle.
  void replay(const TraceRecord& record) {
    trace_.records.push_back(record);
    emit(trace_record_line(record, config_.record_timing));
    if (record.ok()) absorb(record);
  }

  /// Runs until the budget is spent or the surrogate fails.
  void run_to_budget() {
    const std::size_t total = config_.n_init + config_.total_samples;
    try {
      while (trace_.records.size() < total) next_query();
      trace_.complete = true;
    } catch (const SurrogateError& e) {
      trace_.aborted = true;
      trace_.abort_reason = e.what();
    }
    emit(trace_end_line(trace_));
    if (out_.is_open()) out_.close();
  }

  BdsResult result() const {
    BdsResult r;
    for (const auto& rec : trace_.records) {
      if (!rec.ok()) continue;
      r.inputs.push_back(rec.x);
      r.features.push_back(*rec.f);
    }
    r.trace = trace_;
    return r;
  }

 private:
  void emit(const std::string& line) {
    if (!out_.is_open()) return;
    out_ << line << '\n';
    out_.flush();
  }

  void absorb(const TraceRecord& record) {
    const std::uint64_t fit_seed =
        rng::derive_seed(config_.seed, rng::Tag::kHyperFit, model_.size() + 1);
    update(model_, record.x, *record.f, config_.refit, fit_seed);
    const std::size_t id = trace_.snapshots.size();
    trace_.snapshots.push_back(to_json(model_));
    emit(trace_snapshot_line(id, trace_.snapshots.back()));
  }

  std::optional<std::size_t> current_snapshot() const {
    if (trace_.snapshots.empty()) return std::nullopt;
    return trace_.snapshots.size() - 1;
  }

  std::vector<Vector> observed_features() const { return model_.outputs(); }

  Vector choose_explore(std::size_t t, double& acquisition) const {
    const double m = static_cast<double>(model_.output_dim());
    const Objective sigma = [&](const Vector& x) { return std::sqrt(m * model_.variance(x)); };
    const GradientFn sigma_grad = [&](const Vector& x) -> Vector {
      const double s = std::sqrt(m * model_.variance(x));
      if (s <= 0.0) return Vector::Zero(x.size());
      return (m / (2.0 * s)) * model_.variance_gradient(x);
    };
    LbfgsOptions opts = config_.lbfgs;
    opts.seed = rng::derive_seed(config_.seed, rng::Tag::kExplore, t);
    const OptimumResult best = lbfgs_maximize(sigma, sigma_grad, config_.bounds, opts);
    acquisition = best.value;
    return config_.bounds.clamp(best.x);
  }

  Vector choose_exploit(std::size_t t, double& acquisition) const {
    const auto observed = observed_features();
    const std::size_t m = model_.output_dim();
    const Matrix draws = standard_normal_draws(
        config_.acquisition.n_mc, m, rng::derive_seed(config_.seed, rng::Tag::kAcquisition, t));
    const auto score = [&](const Vector& x, const Matrix& z) {
      const PosteriorEstimate post = model_.posterior(x);
      double v = diversity_value_mc(post, observed, config_.metric, z).value;
      if (config_.use_ucb) v += config_.acquisition.beta * exploration_value(post);
      return v;
    };
    DirectOptions opts = config_.direct;
    opts.keep_top = std::max<std::size_t>(config_.rank_candidates, 1);
    const DirectResult found =
        direct_maximize([&](const Vector& x) { return score(x, draws); }, config_.bounds, opts);

    const Matrix rank_draws = standard_normal_draws(
        config_.n_mc_rank, m, rng::derive_seed(config_.seed, rng::Tag::kRanking, t));
    Vector best_x = found.x;
    double best_value = -std::numeric_limits<double>::infinity();
    for (const auto& [x, coarse] : found.top) {
      const double v = score(x, rank_draws);
      if (v > best_value) {
        best_value = v;
        best_x = x;
      }
    }
    acquisition = best_value;
    return config_.bounds.clamp(best_x);
  }

  void next_query() {
    const auto start = Clock::now();
    TraceRecord rec;
    rec.index = trace_.records.size();
    rec.snapshot = current_snapshot();
    if (rec.index < config_.n_init) {
      rec.phase = SamplePhase::kInit;
      auto gen = rng::stream(config_.seed, rng::Tag::kInit, rec.index);
      rec.x = rng::uniform_in(config_.bounds, gen);
    } else {
      const std::size_t t = rec.index - config_.n_init;
      rec.step = t;
      double acquisition = 0.0;
      const Phase phase = phase_for_step(t, config_.n_exp, config_.n_opt);
      // Diversity is undefined before any feature has been observed.
      if (phase == Phase::kExplore || model_.size() == 0) {
        rec.x = choose_explore(t, acquisition);
      } else {
        rec.x = choose_exploit(t, acquisition);
      }
      rec.phase = phase == Phase::kExplore ? SamplePhase::kExplore : SamplePhase::kExploit;
      rec.acquisition = acquisition;
    }

    const std::uint64_t call_seed = rng::derive_seed(config_.seed, rng::Tag::kOracle, rec.index);
    try {
      Vector f = oracle_.evaluate(rec.x, call_seed);
      if (static_cast<std::size_t>(f.size()) != oracle_.feature_dim() || !f.allFinite())
        throw OracleError("oracle returned an invalid feature vector");
      rec.f = std::move(f);
    } catch (const std::exception& e) {
      rec.error = e.what();
      if (rec.error.empty()) rec.error = "oracle evaluation failed";
    }
    if (config_.record_timing)
      rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();

    trace_.records.push_back(rec);
    emit(trace_record_line(rec, config_.record_timing));
    if (rec.ok()) absorb(rec);
  }

  Oracle& oracle_;
  const BdsConfig& config_;
  GpModel model_;
  BdsTrace trace_;
  std::ofstream out_;
};

/// Fields that may legitimately differ between a trace and the resuming config.
nlohmann::json comparable(nlohmann::json config) {
  config.erase("total_samples");
  config.erase("record_timing");
  return config;
}

}  // namespace

FunctionOracle::FunctionOracle(std::size_t input_dim, Vector feature_lo, Vector feature_hi, Fn fn)
    : input_dim_(input_dim), lo_(std::move(feature_lo)), hi_(std::move(feature_hi)), fn_(std::move(fn)) {
  require(input_dim_ >= 1, "FunctionOracle: input dimension must be >= 1");
  require(lo_.size() >= 1 && lo_.size() == hi_.size(), "FunctionOracle: feature range mismatch");
}

std::string to_string(SamplePhase phase) {
  switch (phase) {
    case SamplePhase::kInit: return "init";
    case SamplePhase::kExplore: return "explore";
    case SamplePhase::kExploit: return "exploit";
  }
  return "unknown";
}

void BdsConfig::validate() const {
  require(n_init >= 1, "BdsConfig: n_init must be >= 1");
  require(n_exp + n_opt >= 1, "BdsConfig: n_exp + n_opt must be >= 1");
  require(bounds.dim() >= 1, "BdsConfig: bounds must be set");
  acquisition.validate();
  require(n_mc_rank >= 1, "BdsConfig: n_mc_rank must be >= 1");
  require(direct.budget.max_evals >= 1, "BdsConfig: direct.max_evals must be >= 1");
  require(lbfgs.budget.max_evals >= 1, "BdsConfig: lbfgs.max_evals must be >= 1");
  require(lbfgs.restarts >= 1, "BdsConfig: lbfgs.restarts must be >= 1");
  require(metric.kind == MetricKind::kEuclidean || metric.period > 0,
          "BdsConfig: angular period must be > 0");
  refit.bounds.validate();
}

BdsResult run_bds(Oracle& oracle, const BdsConfig& config,
                  const std::optional<std::filesystem::path>& trace_path,
                  const nlohmann::json& meta) {
  config.validate();
  require(oracle.input_dim() == config.bounds.dim(),
          "run_bds: oracle input dimension must match bounds");
  Runner runner(oracle, config, meta);
  if (trace_path) runner.open(*trace_path);
  runner.run_to_budget();
  return runner.result();
}

BdsResult resume_bds(const std::filesystem::path& trace_path, Oracle& oracle,
                     const BdsConfig& config, const std::optional<std::filesystem::path>& out_path) {
  config.validate();
  require(oracle.input_dim() == config.bounds.dim(),
          "resume_bds: oracle input dimension must match bounds");
  const BdsTrace previous = read_trace(trace_path);

  if (previous.seed != config.seed)
    throw TraceError("trace/config mismatch: seed " + std::to_string(previous.seed) + " vs " +
                     std::to_string(config.seed));
  if (comparable(previous.config) != comparable(to_json(config)))
    throw TraceError("trace/config mismatch: configuration differs from the recorded run");
  if (!same(previous.feature_lo, oracle.feature_lo()) || !same(previous.feature_hi, oracle.feature_hi()))
    throw TraceError("trace/config mismatch: oracle feature range differs");
  if (previous.records.size() > config.n_init + config.total_samples)
    throw TraceError("trace/config mismatch: trace holds more samples than the budget");

  for (const auto& rec : previous.records) {
    if (!config.bounds.contains(rec.x))
      throw TraceError("trace/config mismatch: sample " + std::to_string(rec.index) +
                       " lies outside the bounds");
    if (rec.f && static_cast<std::size_t>(rec.f->size()) != oracle.feature_dim())
      throw TraceError("trace/config mismatch: sample " + std::to_string(rec.index) +
                       " has the wrong feature dimension");
    if (rec.phase == SamplePhase::kInit) continue;
    const Phase expected = phase_for_step(*rec.step, config.n_exp, config.n_opt);
    const bool explore = rec.phase == SamplePhase::kExplore;
    if (explore != (expected == Phase::kExplore))
      throw TraceError("trace/config mismatch: phase of sample " + std::to_string(rec.index) +
                       " disagrees with the schedule");
  }

  const std::filesystem::path target = out_path.value_or(trace_path);
  const std::filesystem::path temp = target.string() + ".tmp";
  Runner runner(oracle, config, previous.meta);
  runner.open(temp);
  for (const auto& rec : previous.records) runner.replay(rec);

  // Replayed snapshots must reproduce the recorded ones.
  const auto& rebuilt = runner.trace().snapshots;
  for (std::size_t i = 0; i < std::min(rebuilt.size(), previous.snapshots.size()); ++i) {
    if (rebuilt[i] != previous.snapshots[i]) {
      std::error_code ec;
      std::filesystem::remove(temp, ec);
      throw TraceError("trace/config mismatch: surrogate snapshot " + std::to_string(i) +
                       " cannot be reproduced from the recorded observations");
    }
  }

  runner.run_to_budget();
  std::filesystem::rename(temp, target);
  return runner.result();
}

}  // namespace bds

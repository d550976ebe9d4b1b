#pragma once

#include "bds/acquisition.hpp"
#include "bds/gp.hpp"
#include "bds/optimize.hpp"
#include "bds/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bds {

/// The expensive strategy-evaluation function g(x). Implementations may throw
/// to signal a failed evaluation; `call_seed` drives any evaluation noise so
/// runs stay reproducible.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t feature_dim() const = 0;
  /// Per-dimension feature value range; its midpoint is the GP prior mean.
  virtual Vector feature_lo() const = 0;
  virtual Vector feature_hi() const = 0;
  virtual Vector evaluate(const Vector& x, std::uint64_t call_seed) = 0;
};

/// Oracle backed by a callable.
class FunctionOracle : public Oracle {
 public:
  using Fn = std::function<Vector(const Vector&, std::uint64_t)>;

  FunctionOracle(std::size_t input_dim, Vector feature_lo, Vector feature_hi, Fn fn);

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t feature_dim() const override { return static_cast<std::size_t>(lo_.size()); }
  Vector feature_lo() const override { return lo_; }
  Vector feature_hi() const override { return hi_; }
  Vector evaluate(const Vector& x, std::uint64_t call_seed) override { return fn_(x, call_seed); }

 private:
  std::size_t input_dim_;
  Vector lo_, hi_;
  Fn fn_;
};

struct BdsConfig {
  /// Loop evaluations after initialization.
  std::size_t total_samples = 10;
  std::size_t n_init = 3;
  std::size_t n_exp = 3;
  std::size_t n_opt = 3;
  BoxBounds bounds;
  FeatureMetric metric = FeatureMetric::euclidean();
  /// n_mc is the draw count seen by DIRECT; rng_seed is ignored (derived per step).
  AcquisitionConfig acquisition{};
  /// Draw count used to re-rank DIRECT's best candidates.
  std::size_t n_mc_rank = 4096;
  std::size_t rank_candidates = 8;
  /// Exploit with a' = a_hat + beta sigma instead of a_hat.
  bool use_ucb = false;
  DirectOptions direct{{500, 10000, 1e-6}, 1e-4, 0};
  LbfgsOptions lbfgs{};
  RefitPolicy refit{};
  std::uint64_t seed = 0;
  /// Wall times make traces differ between runs, so they are opt-in.
  bool record_timing = false;

  void validate() const;
};

nlohmann::json to_json(const BdsConfig& config);
/// Throws ConfigError naming the offending field.
BdsConfig bds_config_from_json(const nlohmann::json& doc);

enum class SamplePhase { kInit, kExplore, kExploit };
std::string to_string(SamplePhase phase);

struct TraceRecord {
  /// Position among all oracle queries of the run, starting at 0.
  std::size_t index = 0;
  /// Loop step t; empty for initialization samples.
  std::optional<std::size_t> step;
  SamplePhase phase = SamplePhase::kInit;
  Vector x;
  /// Empty when the evaluation failed.
  std::optional<Vector> f;
  std::string error;
  std::optional<double> acquisition;
  /// Snapshot id of the surrogate that chose this query.
  std::optional<std::size_t> snapshot;
  std::optional<double> wall_time;

  bool ok() const { return f.has_value(); }
};

struct BdsTrace {
  std::uint64_t seed = 0;
  nlohmann::json config;
  /// Caller-owned description of the run (e.g. which oracle); not interpreted.
  nlohmann::json meta;
  Vector feature_lo, feature_hi;
  std::vector<TraceRecord> records;
  /// Surrogate snapshots (gp_core schema), written after each successful update.
  std::vector<nlohmann::json> snapshots;
  bool complete = false;
  bool aborted = false;
  std::string abort_reason;
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kTraceSchemaVersion = 1;

/// Line-delimited JSON. The first line is the header, followed by sample and
/// snapshot lines in the order they happened, and an end line.
std::string trace_header_line(const BdsTrace& trace);
std::string trace_record_line(const TraceRecord& record, bool with_timing);
std::string trace_snapshot_line(std::size_t id, const nlohmann::json& snapshot);
std::string trace_end_line(const BdsTrace& trace);
std::string serialize_trace(const BdsTrace& trace, bool with_timing);

/// Throws TraceError on any malformed or out-of-sequence line.
BdsTrace parse_trace(const std::string& text);
BdsTrace read_trace(const std::filesystem::path& path);

struct BdsResult {
  /// Successfully evaluated queries, in order.
  std::vector<Vector> inputs;
  std::vector<Vector> features;
  BdsTrace trace;
};

/// Bayesian Diversity Search.
///
/// Evaluates n_init uniform samples, then alternates exploration (maximize the
/// posterior standard deviation with multi-restart L-BFGS) and diversity
/// optimization (maximize the Monte-Carlo expected minimum feature distance
/// with DIRECT) for `total_samples` oracle queries. Failed oracle calls are
/// recorded and consume budget but never reach the surrogate. A surrogate
/// failure stops the run and leaves `trace.aborted` set. When `trace_path` is
/// given, the trace is streamed there line by line.
BdsResult run_bds(Oracle& oracle, const BdsConfig& config,
                  const std::optional<std::filesystem::path>& trace_path = std::nullopt,
                  const nlohmann::json& meta = nullptr);

/// Continues a run from its trace. The surrogate is rebuilt by replaying the
/// recorded observations, so the remaining queries match an uninterrupted run.
/// The trace must have been produced with the same configuration (the budget
/// may grow). The full trace is rewritten to `out_path` (default: in place).
BdsResult resume_bds(const std::filesystem::path& trace_path, Oracle& oracle,
                     const BdsConfig& config,
                     const std::optional<std::filesystem::path>& out_path = std::nullopt);

}  // namespace bds

#pragma once

#include "bds/acquisition.hpp"
#include "bds/search.hpp"
#include "bds/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bds {

/// Default clustering distance for angular strategy features.
inline constexpr double kDefaultClusterThreshold = std::numbers::pi / 6.0;

struct ModeCenter {
  std::string name;
  Vector center;
  Vector feature;
};

/// Piecewise-constant strategy landscape: every input belongs to the mode
/// whose center is nearest after normalizing each dimension to [0, 1] with the
/// bounds (ties go to the lowest mode index) and returns that mode's feature,
/// optionally with Gaussian noise. Inputs farther than `plateau_radius`
/// (normalized units) from every center fail to evaluate.
class SyntheticOracle : public Oracle {
 public:
  SyntheticOracle(std::string name, std::vector<ModeCenter> modes, BoxBounds bounds,
                  FeatureMetric metric, Vector feature_lo, Vector feature_hi,
                  double feature_noise = 0.0,
                  double plateau_radius = std::numeric_limits<double>::infinity());

  std::size_t input_dim() const override { return bounds_.dim(); }
  std::size_t feature_dim() const override { return static_cast<std::size_t>(lo_.size()); }
  Vector feature_lo() const override { return lo_; }
  Vector feature_hi() const override { return hi_; }
  Vector evaluate(const Vector& x, std::uint64_t call_seed) override;

  /// Noise-free mode lookup.
  std::size_t assign(const Vector& x) const;

  /// Checks that distinct mode features are at least 2 * cluster_threshold apart.
  void validate(double cluster_threshold) const;

  const std::string& name() const { return name_; }
  const std::vector<ModeCenter>& modes() const { return modes_; }
  const BoxBounds& bounds() const { return bounds_; }
  const FeatureMetric& metric() const { return metric_; }
  double feature_noise() const { return noise_; }
  double plateau_radius() const { return plateau_radius_; }

  SyntheticOracle with_noise(double feature_noise) const;

 private:
  std::string name_;
  std::vector<ModeCenter> modes_;
  BoxBounds bounds_;
  FeatureMetric metric_;
  Vector lo_, hi_;
  double noise_;
  double plateau_radius_;
};

/// High-jump take-off landscape over (v_z, omega_x, omega_z, alpha) with six
/// mode centers from the published take-off table, each mapped to its own
/// angular strategy feature.
SyntheticOracle make_takeoff_benchmark(double feature_noise = 0.05);

/// Obstacle-jump take-off landscape over (omega_x, omega_y, omega_z).
SyntheticOracle make_obstacle_benchmark(double feature_noise = 0.05);

nlohmann::json to_json(const SyntheticOracle& oracle);
/// Throws ConfigError naming the offending field.
SyntheticOracle synthetic_oracle_from_json(const nlohmann::json& doc);
SyntheticOracle load_synthetic_oracle(const std::filesystem::path& path);

struct Clustering {
  std::size_t count = 0;
  std::vector<std::size_t> labels;
};

/// Greedy sequential clustering: a feature opens a new cluster iff it is
/// farther than `threshold` from every existing representative (the first
/// member of each cluster); otherwise it joins the nearest one.
Clustering distinct_strategies(std::span<const Vector> features, const FeatureMetric& metric,
                               double threshold);

// ---------------------------------------------------------------------------
// BDS vs. random search

struct RunCell {
  std::string method;  // "bds" or "random"
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<Vector> points;
  /// Aligned with `points`; empty for failed evaluations.
  std::vector<std::optional<Vector>> features;
  /// Distinct-strategy count after n_init + budgets[i] evaluations.
  std::vector<std::size_t> counts;

  friend bool operator==(const RunCell& a, const RunCell& b);
};

struct AggregateRow {
  std::string method;
  std::size_t budget = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t completed = 0;

  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

constexpr int kReportSchemaVersion = 1;

struct ComparisonReport {
  std::string oracle;
  std::size_t n_init = 0;
  double cluster_threshold = kDefaultClusterThreshold;
  std::vector<std::size_t> budgets;
  std::vector<std::uint64_t> seeds;
  std::vector<RunCell> runs;
  std::vector<AggregateRow> aggregate;

  /// Failed (method, seed, budget) cells over all cells.
  double failed_fraction() const;
  const AggregateRow* find(const std::string& method, std::size_t budget) const;

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

nlohmann::json to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const nlohmann::json& doc);
/// Columns: method, seed, budget, distinct_count.
std::string report_csv(const ComparisonReport& report);

struct ComparisonOptions {
  std::vector<std::size_t> budgets{10};
  std::vector<std::uint64_t> seeds{0};
  double cluster_threshold = kDefaultClusterThreshold;
  /// 0 picks the hardware concurrency.
  std::size_t threads = 0;
  /// When set, each BDS run streams its trace to <trace_dir>/bds_seed_<seed>.jsonl.
  std::optional<std::filesystem::path> trace_dir;
};

using OracleFactory = std::function<std::unique_ptr<Oracle>()>;

/// Runs, for each seed, one BDS run and one uniform random search with the
/// same number of oracle calls (n_init + budget). BDS has no budget-dependent
/// behavior, so the count at each budget is read off a prefix of one run at
/// the largest budget. `base.seed` is replaced by each cell's seed. Cells run
/// concurrently; the report does not depend on the thread count.
ComparisonReport run_comparison(const OracleFactory& make_oracle, const std::string& oracle_name,
                                const BdsConfig& base, const ComparisonOptions& options);

/// Writes the JSON report to `path` and the CSV table next to it (".csv").
void write_report(const ComparisonReport& report, const std::filesystem::path& path);
ComparisonReport read_report(const std::filesystem::path& path);

/// Per-sample table of a trace: index, step, phase, x, f, acquisition.
std::string format_trace_table(const BdsTrace& trace);

}  // namespace bds

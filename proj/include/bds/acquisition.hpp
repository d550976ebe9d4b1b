#pragma once

#include "bds/gp.hpp"
#include "bds/types.hpp"

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace bds {

enum class MetricKind { kEuclidean, kAngular };

/// Distance on the strategy-feature space.
///
/// Angular features are wrapped per component into [0, period); the distance
/// is the Euclidean norm of the per-component geodesic differences, so a 1D
/// angular distance never exceeds period / 2.
struct FeatureMetric {
  MetricKind kind = MetricKind::kEuclidean;
  double period = 2.0 * std::numbers::pi;

  static FeatureMetric euclidean() { return {MetricKind::kEuclidean, 2.0 * std::numbers::pi}; }
  static FeatureMetric angular(double period = 2.0 * std::numbers::pi) {
    return {MetricKind::kAngular, period};
  }

  double distance(const Vector& a, const Vector& b) const;
  /// Maps a sampled feature back into the feature domain (identity for Euclidean).
  Vector wrap(const Vector& f) const;

  std::string name() const { return kind == MetricKind::kEuclidean ? "euclidean" : "angular"; }
  friend bool operator==(const FeatureMetric&, const FeatureMetric&) = default;
};

struct AcquisitionConfig {
  std::size_t n_mc = 256;
  /// Weight of the posterior standard deviation in ucb_value.
  double beta = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct McEstimate {
  double value = 0.0;
  /// Standard error of the Monte-Carlo mean.
  double std_error = 0.0;
};

/// Standard-normal draws (n_mc x feature_dim) reused across query points so
/// the acquisition surface is deterministic within one optimization.
Matrix standard_normal_draws(std::size_t n_mc, std::size_t feature_dim, std::uint64_t seed);

/// Monte-Carlo estimate of E[min_i dist(f, f_i)] for f ~ N(mean, diag(variance)).
/// Throws ContractError when `observed` is empty.
McEstimate diversity_value_mc(const PosteriorEstimate& post, std::span<const Vector> observed,
                              const FeatureMetric& metric, const Matrix& draws);

/// Same, drawing `cfg.n_mc` samples from `cfg.rng_seed`.
McEstimate diversity_value_mc(const PosteriorEstimate& post, std::span<const Vector> observed,
                              const FeatureMetric& metric, const AcquisitionConfig& cfg);

/// Exact E|f - nearest observed value| for scalar f ~ N(mean, sd^2) and
/// Euclidean distance, integrating over the Voronoi cells of `observed`.
double diversity_value_exact_1d(double mean, double sd, std::vector<double> observed);

/// Overload taking a one-dimensional posterior; throws ContractError otherwise.
double diversity_value_exact_1d(const PosteriorEstimate& post, std::span<const Vector> observed);

/// Posterior standard deviation; root of the summed variances for multi-output posteriors.
double exploration_value(const PosteriorEstimate& post);

/// a' = diversity_value_mc + beta * exploration_value.
McEstimate ucb_value(const PosteriorEstimate& post, std::span<const Vector> observed,
                     const FeatureMetric& metric, const AcquisitionConfig& cfg);

enum class Phase { kExplore, kExploit };

/// Explore iff t mod (n_exp + n_opt) < n_exp.
Phase phase_for_step(std::size_t t, std::size_t n_exp, std::size_t n_opt);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace bds

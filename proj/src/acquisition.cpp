#include "bds/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace bds {
namespace {

double wrap_angle(double a, double period) {
  double w = std::fmod(a, period);
  if (w < 0) w += period;
  return w;
}

// Integral of (y - s) N(y; mean, sd^2) over [a, c].
double centered_moment(double a, double c, double s, double mean, double sd) {
  const auto pdf = [&](double y) { return std::isfinite(y) ? normal_pdf((y - mean) / sd) : 0.0; };
  const auto cdf = [&](double y) {
    if (y == -std::numeric_limits<double>::infinity()) return 0.0;
    if (y == std::numeric_limits<double>::infinity()) return 1.0;
    return normal_cdf((y - mean) / sd);
  };
  return sd * (pdf(a) - pdf(c)) + (mean - s) * (cdf(c) - cdf(a));
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double FeatureMetric::distance(const Vector& a, const Vector& b) const {
  require(a.size() == b.size(), "FeatureMetric: dimension mismatch");
  if (kind == MetricKind::kEuclidean) return (a - b).norm();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = wrap_angle(a[i] - b[i], period);
    const double geodesic = std::min(d, period - d);
    sum += geodesic * geodesic;
  }
  return std::sqrt(sum);
}

Vector FeatureMetric::wrap(const Vector& f) const {
  if (kind == MetricKind::kEuclidean) return f;
  Vector out(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) out[i] = wrap_angle(f[i], period);
  return out;
}

void AcquisitionConfig::validate() const {
  require(n_mc >= 1, "AcquisitionConfig: n_mc must be >= 1");
  require(std::isfinite(beta), "AcquisitionConfig: beta must be finite");
}

Matrix standard_normal_draws(std::size_t n_mc, std::size_t feature_dim, std::uint64_t seed) {
  auto gen = rng::stream(seed, rng::Tag::kAcquisition, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(static_cast<Eigen::Index>(n_mc), static_cast<Eigen::Index>(feature_dim));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(gen);
  return z;
}

McEstimate diversity_value_mc(const PosteriorEstimate& post, std::span<const Vector> observed,
                              const FeatureMetric& metric, const Matrix& draws) {
  require(!observed.empty(), "diversity_value_mc: observed features must be non-empty");
  require(post.mean.size() == post.variance.size() && post.mean.size() == draws.cols(),
          "diversity_value_mc: posterior and draw dimensions must agree");
  for (const auto& f : observed)
    require(f.size() == post.mean.size(), "diversity_value_mc: feature dimension mismatch");
  require(draws.rows() >= 1, "diversity_value_mc: need at least one draw");

  const Vector sd = post.variance.cwiseMax(0.0).cwiseSqrt();
  const auto n = draws.rows();
  double sum = 0.0;
  double sum_sq = 0.0;
  Vector sample(post.mean.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    sample = metric.wrap(post.mean + sd.cwiseProduct(draws.row(j).transpose()));
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& f : observed) nearest = std::min(nearest, metric.distance(sample, f));
    sum += nearest;
    sum_sq += nearest * nearest;
  }
  McEstimate out;
  const double nd = static_cast<double>(n);
  out.value = sum / nd;
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - nd * out.value * out.value) / (nd - 1.0));
    out.std_error = std::sqrt(var / nd);
  }
  return out;
}

McEstimate diversity_value_mc(const PosteriorEstimate& post, std::span<const Vector> observed,
                              const FeatureMetric& metric, const AcquisitionConfig& cfg) {
  cfg.validate();
  const Matrix draws =
      standard_normal_draws(cfg.n_mc, static_cast<std::size_t>(post.mean.size()), cfg.rng_seed);
  return diversity_value_mc(post, observed, metric, draws);
}

double diversity_value_exact_1d(double mean, double sd, std::vector<double> observed) {
  require(!observed.empty(), "diversity_value_exact_1d: observed features must be non-empty");
  require(std::isfinite(mean) && std::isfinite(sd) && sd >= 0.0,
          "diversity_value_exact_1d: invalid Gaussian");
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());

  if (sd == 0.0) {
    double nearest = std::numeric_limits<double>::infinity();
    for (double s : observed) nearest = std::min(nearest, std::abs(mean - s));
    return nearest;
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double s = observed[i];
    const double lo = i == 0 ? -inf : 0.5 * (observed[i - 1] + s);
    const double hi = i + 1 == observed.size() ? inf : 0.5 * (s + observed[i + 1]);
    // |y - s| = (s - y) on [lo, s], (y - s) on [s, hi].
    total -= centered_moment(lo, s, s, mean, sd);
    total += centered_moment(s, hi, s, mean, sd);
  }
  return total;
}

double diversity_value_exact_1d(const PosteriorEstimate& post, std::span<const Vector> observed) {
  require(post.mean.size() == 1, "diversity_value_exact_1d: feature dimension must be 1");
  std::vector<double> values;
  for (const auto& f : observed) {
    require(f.size() == 1, "diversity_value_exact_1d: feature dimension must be 1");
    values.push_back(f[0]);
  }
  return diversity_value_exact_1d(post.mean[0], std::sqrt(std::max(0.0, post.variance[0])),
                                  std::move(values));
}

double exploration_value(const PosteriorEstimate& post) {
  return std::sqrt(post.variance.cwiseMax(0.0).sum());
}

McEstimate ucb_value(const PosteriorEstimate& post, std::span<const Vector> observed,
                     const FeatureMetric& metric, const AcquisitionConfig& cfg) {
  McEstimate out = diversity_value_mc(post, observed, metric, cfg);
  out.value += cfg.beta * exploration_value(post);
  return out;
}

Phase phase_for_step(std::size_t t, std::size_t n_exp, std::size_t n_opt) {
  require(n_exp + n_opt >= 1, "phase_for_step: n_exp + n_opt must be >= 1");
  return t % (n_exp + n_opt) < n_exp ? Phase::kExplore : Phase::kExploit;
}

}  // namespace bds

#pragma once

#include "bds/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace bds {

/// Matérn 5/2 hyperparameters: signal variance and per-dimension weights of
/// the Mahalanobis distance. Weights act on unit-box coordinates when used
/// through GpModel.
struct KernelParams {
  double theta = 1.0;
  Vector lambda;

  void validate() const;
  friend bool operator==(const KernelParams& a, const KernelParams& b) {
    return a.theta == b.theta && same(a.lambda, b.lambda);
  }
};

/// sqrt((x - x2)^T diag(lambda) (x - x2))
double mahalanobis(const Vector& x, const Vector& x2, const Vector& lambda);

double matern52_at(double distance, double theta);

/// theta (1 + sqrt5 d + 5/3 d^2) exp(-sqrt5 d), d = mahalanobis(x, x2, lambda).
double matern52(const Vector& x, const Vector& x2, const KernelParams& params);

struct PosteriorEstimate {
  Vector mean;
  Vector variance;
};

namespace detail {

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

/// Cholesky of `gram` (already including eta^2 on the diagonal). Plain
/// factorization first, then jitter 1e-10 theta growing x10 up to 1e-8 theta.
/// Throws SurrogateError when all attempts fail.
Factorization factorize(const Matrix& gram, double theta);

/// Gram matrix of the rows of `points` (one point per row).
Matrix gram(const Matrix& points, const KernelParams& params);

}  // namespace detail

/// Independent scalar GPs per output dimension sharing one set of inputs,
/// kernel hyperparameters and noise level.
///
/// Inputs are mapped affinely to the unit box internally. The prior mean of
/// each output is the midpoint of its feature value range. The factorization
/// of (K + eta^2 I) is rebuilt from scratch whenever observations or
/// hyperparameters change, so identical data always yields bit-identical
/// posteriors regardless of the order of updates.
class GpModel {
 public:
  GpModel(BoxBounds bounds, Vector feature_lo, Vector feature_hi, KernelParams params, double eta);

  /// Reasonable starting hyperparameters for a box and feature range.
  static GpModel with_default_params(BoxBounds bounds, Vector feature_lo, Vector feature_hi);

  std::size_t input_dim() const { return bounds_.dim(); }
  std::size_t output_dim() const { return static_cast<std::size_t>(prior_mean_.size()); }
  std::size_t size() const { return inputs_.size(); }

  const BoxBounds& bounds() const { return bounds_; }
  const KernelParams& params() const { return params_; }
  double eta() const { return eta_; }
  const Vector& prior_mean() const { return prior_mean_; }
  const Vector& feature_lo() const { return feature_lo_; }
  const Vector& feature_hi() const { return feature_hi_; }
  double jitter() const { return factor_.jitter; }

  /// Largest width of the feature value ranges.
  double output_range() const;

  const std::vector<Vector>& inputs() const { return inputs_; }
  const std::vector<Vector>& outputs() const { return outputs_; }

  void set_hyperparameters(KernelParams params, double eta);

  /// Appends an observation and refactorizes. Throws ContractError if `x` is
  /// outside the bounds or dimensions disagree.
  void add_observation(const Vector& x, const Vector& f);

  PosteriorEstimate posterior(const Vector& x) const;

  /// Posterior variance (identical for every output dimension).
  double variance(const Vector& x) const;

  /// Gradient of the posterior variance with respect to raw input coordinates.
  Vector variance_gradient(const Vector& x) const;

  double log_marginal_likelihood() const;

  /// Inputs in unit-box coordinates, one per row.
  const Matrix& unit_inputs() const { return unit_inputs_; }
  /// Observed outputs minus the prior mean, one observation per row.
  Matrix residuals() const;

 private:
  friend GpModel gp_from_json(const nlohmann::json& doc);

  void refactor();
  Vector kernel_column(const Vector& unit_x) const;

  BoxBounds bounds_;
  Vector feature_lo_;
  Vector feature_hi_;
  Vector prior_mean_;
  KernelParams params_;
  double eta_;
  std::vector<Vector> inputs_;
  std::vector<Vector> outputs_;
  Matrix unit_inputs_;
  detail::Factorization factor_;
  Matrix alpha_;  // (K + eta^2 I)^-1 (F - m), t x outputs
};

// ---------------------------------------------------------------------------
// Hyperparameters

/// Search box for (theta, lambda, eta). Every lambda component shares one range.
struct HyperBounds {
  double theta_lo = 1e-4;
  double theta_hi = 1e2;
  double lambda_lo = 1e-2;
  double lambda_hi = 1e3;
  double eta_lo = 1e-6;
  double eta_hi = 1.0;
  /// eta is never fitted below this fraction of the output range.
  double eta_floor_fraction = 1e-4;

  void validate() const;
};

struct HyperFit {
  KernelParams params;
  double eta = 0.0;
  double log_likelihood = 0.0;
  /// No restart improved on the initial guess; the initial guess is returned.
  bool warning = false;
};

/// Log marginal likelihood summed over output dimensions, and optionally its
/// gradient with respect to (log theta, log lambda_1..d, log eta).
/// Returns -inf when the Gram matrix cannot be factorized.
double log_marginal_likelihood(const Matrix& unit_inputs, const Matrix& residuals,
                               const KernelParams& params, double eta, Vector* gradient = nullptr);

/// Maximizes the log marginal likelihood with multi-restart L-BFGS in
/// log-parameter space. The first start is the model's current parameters
/// (clipped into the box); the rest are uniform in the log box. Requires at
/// least two observations.
HyperFit fit_hyperparameters(const GpModel& model, const HyperBounds& bounds, std::uint64_t seed,
                             std::size_t restarts = 8);

struct RefitPolicy {
  bool enabled = true;
  /// Refit after every observation while the observation count is <= this.
  std::size_t every_until = 20;
  /// Afterwards, refit when the observation count is a multiple of this.
  std::size_t period = 5;
  std::size_t restarts = 8;
  HyperBounds bounds{};

  bool should_refit(std::size_t observation_count) const;
};

/// Appends an observation, refactorizes, and refits hyperparameters when the
/// policy asks for it. Returns true when a refit happened.
bool update(GpModel& model, const Vector& x, const Vector& f, const RefitPolicy& policy,
            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Snapshots

nlohmann::json to_json(const GpModel& model);
GpModel gp_from_json(const nlohmann::json& doc);

}  // namespace bds

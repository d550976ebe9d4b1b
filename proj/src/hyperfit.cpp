#include "bds/gp.hpp"
#include "bds/optimize.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bds {
namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

struct LogBox {
  BoxBounds box;
  std::size_t input_dim;
};

LogBox make_log_box(const HyperBounds& hb, std::size_t input_dim, double output_range) {
  const double eta_lo = std::max(hb.eta_lo, hb.eta_floor_fraction * output_range);
  const double eta_hi = std::max(hb.eta_hi, 10.0 * eta_lo);
  const auto n = static_cast<Eigen::Index>(input_dim + 2);
  Vector lo(n), hi(n);
  lo[0] = std::log(hb.theta_lo);
  hi[0] = std::log(hb.theta_hi);
  for (std::size_t i = 0; i < input_dim; ++i) {
    lo[static_cast<Eigen::Index>(i + 1)] = std::log(hb.lambda_lo);
    hi[static_cast<Eigen::Index>(i + 1)] = std::log(hb.lambda_hi);
  }
  lo[n - 1] = std::log(eta_lo);
  hi[n - 1] = std::log(eta_hi);
  return {BoxBounds(lo, hi), input_dim};
}

Vector pack(const KernelParams& p, double eta) {
  Vector z(p.lambda.size() + 2);
  z[0] = std::log(p.theta);
  z.segment(1, p.lambda.size()) = p.lambda.array().log().matrix();
  z[z.size() - 1] = std::log(std::max(eta, 1e-300));
  return z;
}

void unpack(const Vector& z, KernelParams& p, double& eta) {
  p.theta = std::exp(z[0]);
  p.lambda = z.segment(1, z.size() - 2).array().exp().matrix();
  eta = std::exp(z[z.size() - 1]);
}

}  // namespace

void HyperBounds::validate() const {
  require(theta_lo > 0 && theta_lo < theta_hi, "HyperBounds: need 0 < theta_lo < theta_hi");
  require(lambda_lo > 0 && lambda_lo < lambda_hi, "HyperBounds: need 0 < lambda_lo < lambda_hi");
  require(eta_lo > 0 && eta_lo < eta_hi, "HyperBounds: need 0 < eta_lo < eta_hi");
  require(eta_floor_fraction >= 0, "HyperBounds: eta_floor_fraction must be >= 0");
}

double log_marginal_likelihood(const Matrix& unit_inputs, const Matrix& residuals,
                               const KernelParams& params, double eta, Vector* gradient) {
  const auto t = unit_inputs.rows();
  const auto m = residuals.cols();
  const Matrix k = detail::gram(unit_inputs, params);
  Matrix ky = k;
  ky.diagonal().array() += eta * eta;

  detail::Factorization fac;
  try {
    fac = detail::factorize(ky, params.theta);
  } catch (const SurrogateError&) {
    return -std::numeric_limits<double>::infinity();
  }
  const Matrix alpha = fac.llt.solve(residuals);
  const double log_det = 2.0 * fac.llt.matrixLLT().diagonal().array().log().sum();
  const double fit = (residuals.array() * alpha.array()).sum();
  const double ll = -0.5 * fit - 0.5 * static_cast<double>(m) * log_det -
                    0.5 * static_cast<double>(t * m) * std::log(2.0 * std::numbers::pi);

  if (gradient != nullptr) {
    // d ll / d p = 1/2 tr((alpha alpha^T - m Ky^-1) dKy/dp)
    const Matrix ky_inv = fac.llt.solve(Matrix::Identity(t, t));
    const Matrix w = alpha * alpha.transpose() - static_cast<double>(m) * ky_inv;
    const auto d = unit_inputs.cols();
    Vector g = Vector::Zero(d + 2);
    g[0] = 0.5 * (w.array() * k.array()).sum();
    for (Eigen::Index i = 0; i < t; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const Vector diff = unit_inputs.row(i).transpose() - unit_inputs.row(j).transpose();
        const double r = mahalanobis(unit_inputs.row(i).transpose(),
                                     unit_inputs.row(j).transpose(), params.lambda);
        const double common =
            -params.theta * (5.0 / 6.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
        // Off-diagonal pairs appear twice in the trace.
        for (Eigen::Index a = 0; a < d; ++a)
          g[1 + a] += w(i, j) * common * params.lambda[a] * diff[a] * diff[a];
      }
    }
    g[d + 1] = eta * eta * w.trace();
    *gradient = g;
  }
  return ll;
}

HyperFit fit_hyperparameters(const GpModel& model, const HyperBounds& bounds, std::uint64_t seed,
                             std::size_t restarts) {
  bounds.validate();
  require(model.size() >= 2, "fit_hyperparameters: need at least two observations");
  require(restarts >= 1, "fit_hyperparameters: need at least one restart");

  const LogBox lb = make_log_box(bounds, model.input_dim(), model.output_range());
  const Matrix& inputs = model.unit_inputs();
  const Matrix residuals = model.residuals();

  const ValueAndGradient neg_ll = [&](const Vector& z, Vector& grad) {
    KernelParams p;
    double eta = 0.0;
    unpack(z, p, eta);
    Vector g;
    const double ll = log_marginal_likelihood(inputs, residuals, p, eta, &g);
    if (!std::isfinite(ll)) {
      grad = Vector::Zero(z.size());
      return std::numeric_limits<double>::infinity();
    }
    grad = -g;
    return -ll;
  };

  const Vector initial = lb.box.clamp(pack(model.params(), model.eta()));
  Vector scratch;
  const double initial_value = neg_ll(initial, scratch);

  Vector best_z = initial;
  double best_value = initial_value;
  bool improved = false;

  auto gen = rng::stream(seed, rng::Tag::kHyperFit, 0);
  const OptimizerBudget budget{300, 100, 1e-9};
  for (std::size_t r = 0; r < restarts; ++r) {
    const Vector start = r == 0 ? initial : rng::uniform_in(lb.box, gen);
    const LocalSearch ls = lbfgs_minimize(neg_ll, start, lb.box, 10, budget);
    if (std::isfinite(ls.value) && ls.value < best_value) {
      best_value = ls.value;
      best_z = ls.x;
      improved = true;
    }
  }

  HyperFit out;
  unpack(best_z, out.params, out.eta);
  out.log_likelihood = -best_value;
  out.warning = !improved;
  return out;
}

bool RefitPolicy::should_refit(std::size_t observation_count) const {
  if (!enabled || observation_count < 2) return false;
  if (observation_count <= every_until) return true;
  return period > 0 && observation_count % period == 0;
}

bool update(GpModel& model, const Vector& x, const Vector& f, const RefitPolicy& policy,
            std::uint64_t seed) {
  model.add_observation(x, f);
  if (!policy.should_refit(model.size())) return false;
  const HyperFit fit = fit_hyperparameters(model, policy.bounds, seed, policy.restarts);
  if (!fit.warning) model.set_hyperparameters(fit.params, fit.eta);
  return true;
}

}  // namespace bds

#include "bds/gp.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bds {
namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

Vector to_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json to_array(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

void KernelParams::validate() const {
  require(std::isfinite(theta) && theta > 0.0, "KernelParams: theta must be > 0");
  require(lambda.size() > 0, "KernelParams: lambda must be non-empty");
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    require(std::isfinite(lambda[i]) && lambda[i] > 0.0, "KernelParams: lambda must be > 0");
}

double mahalanobis(const Vector& x, const Vector& x2, const Vector& lambda) {
  require(x.size() == x2.size() && x.size() == lambda.size(),
          "matern52: point and lambda dimensions must agree");
  double q = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double diff = x[i] - x2[i];
    q += lambda[i] * diff * diff;
  }
  return std::sqrt(q);
}

double matern52_at(double distance, double theta) {
  const double s = kSqrt5 * distance;
  return theta * (1.0 + s + (5.0 / 3.0) * distance * distance) * std::exp(-s);
}

double matern52(const Vector& x, const Vector& x2, const KernelParams& params) {
  return matern52_at(mahalanobis(x, x2, params.lambda), params.theta);
}

namespace detail {

Factorization factorize(const Matrix& gram, double theta) {
  Factorization out;
  out.llt.compute(gram);
  if (out.llt.info() == Eigen::Success) return out;

  const auto n = gram.rows();
  for (double jitter = 1e-10 * theta; jitter <= 1e-8 * theta * (1.0 + 1e-9); jitter *= 10.0) {
    Matrix jittered = gram;
    jittered.diagonal().array() += jitter;
    out.llt.compute(jittered);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw SurrogateError("GP Gram matrix is not positive definite after maximal jitter (n = " +
                       std::to_string(n) + ")");
}

Matrix gram(const Matrix& points, const KernelParams& params) {
  const auto n = points.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.theta;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = matern52(points.row(i).transpose(), points.row(j).transpose(), params);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace detail

GpModel::GpModel(BoxBounds bounds, Vector feature_lo, Vector feature_hi, KernelParams params,
                 double eta)
    : bounds_(std::move(bounds)),
      feature_lo_(std::move(feature_lo)),
      feature_hi_(std::move(feature_hi)),
      params_(std::move(params)),
      eta_(eta) {
  require(feature_lo_.size() > 0 && feature_lo_.size() == feature_hi_.size(),
          "GpModel: feature range dimension mismatch");
  for (Eigen::Index i = 0; i < feature_lo_.size(); ++i)
    require(feature_lo_[i] <= feature_hi_[i], "GpModel: feature range lo must be <= hi");
  params_.validate();
  require(static_cast<std::size_t>(params_.lambda.size()) == bounds_.dim(),
          "GpModel: lambda dimension must match input dimension");
  require(std::isfinite(eta_) && eta_ >= 0.0, "GpModel: eta must be >= 0");
  prior_mean_ = (feature_lo_ + feature_hi_) / 2.0;
  unit_inputs_.resize(0, static_cast<Eigen::Index>(bounds_.dim()));
  alpha_.resize(0, prior_mean_.size());
}

GpModel GpModel::with_default_params(BoxBounds bounds, Vector feature_lo, Vector feature_hi) {
  const double range = std::max((feature_hi - feature_lo).maxCoeff(), 1e-12);
  KernelParams p;
  p.theta = std::max(range * range / 16.0, 1e-6);
  p.lambda = Vector::Constant(static_cast<Eigen::Index>(bounds.dim()), 10.0);
  return GpModel(std::move(bounds), std::move(feature_lo), std::move(feature_hi), std::move(p),
                 0.01 * range);
}

double GpModel::output_range() const { return (feature_hi_ - feature_lo_).maxCoeff(); }

void GpModel::set_hyperparameters(KernelParams params, double eta) {
  params.validate();
  require(static_cast<std::size_t>(params.lambda.size()) == bounds_.dim(),
          "GpModel: lambda dimension must match input dimension");
  require(std::isfinite(eta) && eta >= 0.0, "GpModel: eta must be >= 0");
  params_ = std::move(params);
  eta_ = eta;
  refactor();
}

void GpModel::add_observation(const Vector& x, const Vector& f) {
  require(static_cast<std::size_t>(x.size()) == input_dim(), "GpModel: input dimension mismatch");
  require(static_cast<std::size_t>(f.size()) == output_dim(),
          "GpModel: feature dimension mismatch");
  require(bounds_.contains(x), "GpModel: observation input outside bounds");
  require(f.allFinite(), "GpModel: observed feature must be finite");
  inputs_.push_back(x);
  outputs_.push_back(f);
  const auto t = static_cast<Eigen::Index>(inputs_.size());
  unit_inputs_.conservativeResize(t, Eigen::NoChange);
  unit_inputs_.row(t - 1) = bounds_.to_unit(x).transpose();
  refactor();
}

Matrix GpModel::residuals() const {
  Matrix r(static_cast<Eigen::Index>(outputs_.size()), prior_mean_.size());
  for (std::size_t i = 0; i < outputs_.size(); ++i)
    r.row(static_cast<Eigen::Index>(i)) = (outputs_[i] - prior_mean_).transpose();
  return r;
}

void GpModel::refactor() {
  if (inputs_.empty()) {
    factor_ = {};
    alpha_.resize(0, prior_mean_.size());
    return;
  }
  Matrix k = detail::gram(unit_inputs_, params_);
  k.diagonal().array() += eta_ * eta_;
  factor_ = detail::factorize(k, params_.theta);
  alpha_ = factor_.llt.solve(residuals());
}

Vector GpModel::kernel_column(const Vector& unit_x) const {
  Vector k(unit_inputs_.rows());
  for (Eigen::Index i = 0; i < unit_inputs_.rows(); ++i)
    k[i] = matern52(unit_inputs_.row(i).transpose(), unit_x, params_);
  return k;
}

PosteriorEstimate GpModel::posterior(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == input_dim(), "posterior: input dimension mismatch");
  PosteriorEstimate out;
  const double prior_var = params_.theta + eta_ * eta_;
  if (inputs_.empty()) {
    out.mean = prior_mean_;
    out.variance = Vector::Constant(prior_mean_.size(), prior_var);
    return out;
  }
  const Vector k = kernel_column(bounds_.to_unit(x));
  out.mean = prior_mean_ + alpha_.transpose() * k;
  const Vector v = factor_.llt.matrixL().solve(k);
  out.variance = Vector::Constant(prior_mean_.size(), std::max(0.0, prior_var - v.squaredNorm()));
  return out;
}

double GpModel::variance(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == input_dim(), "variance: input dimension mismatch");
  const double prior_var = params_.theta + eta_ * eta_;
  if (inputs_.empty()) return prior_var;
  const Vector k = kernel_column(bounds_.to_unit(x));
  const Vector v = factor_.llt.matrixL().solve(k);
  return std::max(0.0, prior_var - v.squaredNorm());
}

Vector GpModel::variance_gradient(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == input_dim(),
          "variance_gradient: input dimension mismatch");
  const auto d = static_cast<Eigen::Index>(input_dim());
  Vector grad = Vector::Zero(d);
  if (inputs_.empty()) return grad;
  const Vector u = bounds_.to_unit(x);
  const Vector k = kernel_column(u);
  const Vector w = factor_.llt.solve(k);
  // dk_i/du = -theta (5/3) (1 + sqrt5 r) exp(-sqrt5 r) diag(lambda) (u - u_i)
  for (Eigen::Index i = 0; i < unit_inputs_.rows(); ++i) {
    const Vector diff = u - unit_inputs_.row(i).transpose();
    const double r = mahalanobis(u, unit_inputs_.row(i).transpose(), params_.lambda);
    const double scale =
        -params_.theta * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
    grad += (-2.0 * w[i] * scale) * params_.lambda.cwiseProduct(diff);
  }
  return grad.cwiseQuotient(bounds_.width());
}

double GpModel::log_marginal_likelihood() const {
  return bds::log_marginal_likelihood(unit_inputs_, residuals(), params_, eta_);
}

nlohmann::json to_json(const GpModel& model) {
  nlohmann::json inputs = nlohmann::json::array();
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& x : model.inputs()) inputs.push_back(to_array(x));
  for (const auto& f : model.outputs()) outputs.push_back(to_array(f));
  return {
      {"schema_version", 1},
      {"input_dim", model.input_dim()},
      {"output_dim", model.output_dim()},
      {"bounds", {{"lower", to_array(model.bounds().lower())},
                  {"upper", to_array(model.bounds().upper())}}},
      {"feature_range", {{"lo", to_array(model.feature_lo())}, {"hi", to_array(model.feature_hi())}}},
      {"prior_mean", to_array(model.prior_mean())},
      {"params", {{"theta", model.params().theta},
                  {"lambda", to_array(model.params().lambda)},
                  {"eta", model.eta()}}},
      {"observations", {{"inputs", inputs}, {"outputs", outputs}}},
  };
}

GpModel gp_from_json(const nlohmann::json& doc) {
  try {
    require(doc.at("schema_version").get<int>() == 1, "GP snapshot: unsupported schema_version");
    BoxBounds bounds(to_vector(doc.at("bounds").at("lower")), to_vector(doc.at("bounds").at("upper")));
    KernelParams params{doc.at("params").at("theta").get<double>(),
                        to_vector(doc.at("params").at("lambda"))};
    GpModel model(std::move(bounds), to_vector(doc.at("feature_range").at("lo")),
                  to_vector(doc.at("feature_range").at("hi")), std::move(params),
                  doc.at("params").at("eta").get<double>());
    const auto& obs = doc.at("observations");
    const auto& xs = obs.at("inputs");
    const auto& fs = obs.at("outputs");
    require(xs.size() == fs.size(), "GP snapshot: inputs/outputs count mismatch");
    const auto t = static_cast<Eigen::Index>(xs.size());
    model.unit_inputs_.resize(t, static_cast<Eigen::Index>(model.input_dim()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Vector x = to_vector(xs[i]);
      Vector f = to_vector(fs[i]);
      require(static_cast<std::size_t>(x.size()) == model.input_dim() && model.bounds().contains(x),
              "GP snapshot: observation input invalid");
      require(static_cast<std::size_t>(f.size()) == model.output_dim() && f.allFinite(),
              "GP snapshot: observation output invalid");
      model.unit_inputs_.row(static_cast<Eigen::Index>(i)) = model.bounds().to_unit(x).transpose();
      model.inputs_.push_back(std::move(x));
      model.outputs_.push_back(std::move(f));
    }
    model.refactor();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("GP snapshot: malformed document: ") + e.what());
  }
}

}  // namespace bds

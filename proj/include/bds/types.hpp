#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a caller violates a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The GP Gram matrix could not be factorized even with maximal jitter.
class SurrogateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by oracles when a strategy evaluation fails.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration. `field` is a dotted path ("acquisition.n_mc"); `line`
/// is set for syntax errors (1-based, 0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, std::size_t line = 0)
      : std::runtime_error(describe(field, message, line)), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  static std::string describe(const std::string& field, const std::string& message,
                              std::size_t line) {
    std::string out = "config";
    if (line > 0) out += " line " + std::to_string(line);
    if (!field.empty()) out += " field '" + field + "'";
    return out + ": " + message;
  }

  std::string field_;
  std::size_t line_;
};

/// Exact equality that tolerates mismatched sizes (Eigen asserts on them).
inline bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

/// Axis-aligned box in the input space.
class BoxBounds {
 public:
  BoxBounds() = default;
  BoxBounds(Vector lower, Vector upper);

  static BoxBounds unit(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector width() const { return upper_ - lower_; }

  /// Inclusive containment with a relative slack of `tol` of each width.
  bool contains(const Vector& x, double tol = 1e-12) const;
  Vector clamp(const Vector& x) const;

  /// Affine map to [0,1]^d and back.
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& u) const;

  friend bool operator==(const BoxBounds& a, const BoxBounds& b) {
    return same(a.lower_, b.lower_) && same(a.upper_, b.upper_);
  }

 private:
  Vector lower_;
  Vector upper_;
};

inline BoxBounds::BoxBounds(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(lower_.size() == upper_.size(), "BoxBounds: lower/upper dimension mismatch");
  require(lower_.size() > 0, "BoxBounds: empty box");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    require(std::isfinite(lower_[i]) && std::isfinite(upper_[i]),
            "BoxBounds: bounds must be finite");
    require(lower_[i] < upper_[i], "BoxBounds: lower must be < upper componentwise");
  }
}

inline BoxBounds BoxBounds::unit(std::size_t dim) {
  return BoxBounds(Vector::Zero(static_cast<Eigen::Index>(dim)),
                   Vector::Ones(static_cast<Eigen::Index>(dim)));
}

inline bool BoxBounds::contains(const Vector& x, double tol) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double slack = tol * (upper_[i] - lower_[i]);
    if (!(x[i] >= lower_[i] - slack && x[i] <= upper_[i] + slack)) return false;
  }
  return true;
}

inline Vector BoxBounds::clamp(const Vector& x) const {
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

inline Vector BoxBounds::to_unit(const Vector& x) const {
  return (x - lower_).cwiseQuotient(upper_ - lower_);
}

inline Vector BoxBounds::from_unit(const Vector& u) const {
  return lower_ + u.cwiseProduct(upper_ - lower_);
}

/// Independent RNG streams derived from one 64-bit run seed.
///
/// Every random decision of a run is drawn from `stream(seed, tag, index)`, so a
/// step can be replayed without replaying the draws of earlier steps.
namespace rng {

enum class Tag : std::uint32_t {
  kInit = 1,
  kHyperFit = 2,
  kAcquisition = 3,
  kRanking = 4,
  kExplore = 5,
  kOracle = 6,
  kRandomSearch = 7,
  kTest = 99,
};

inline std::mt19937_64 stream(std::uint64_t seed, Tag tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, Tag tag, std::uint64_t index) {
  auto gen = stream(seed, tag, index);
  return gen();
}

inline Vector uniform_in(const BoxBounds& box, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) x[static_cast<Eigen::Index>(i)] = u(gen);
  return box.from_unit(x);
}

}  // namespace rng
}  // namespace bds

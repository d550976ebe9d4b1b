#pragma once

#include "bds/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace bds {

struct OptimizerBudget {
  std::size_t max_evals = 500;
  std::size_t max_iters = 200;
  double tol = 1e-9;
};

struct OptimumResult {
  Vector x;
  double value = 0.0;
  std::size_t evaluations = 0;
  /// Set when the optimizer fell back to a sampled point instead of a converged one.
  bool warning = false;
};

using Objective = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;

// ---------------------------------------------------------------------------
// DIRECT (dividing rectangles)

struct DirectOptions {
  OptimizerBudget budget{};
  /// Potential-optimality slack.
  double epsilon = 1e-4;
  /// Number of best distinct evaluated points kept in `DirectResult::top`.
  std::size_t keep_top = 0;
};

struct DirectResult : OptimumResult {
  /// Best evaluated points in decreasing objective order (size <= keep_top).
  std::vector<std::pair<Vector, double>> top;
};

/// Maximizes `objective` over `bounds` with the DIRECT algorithm.
///
/// The box is normalized to the unit cube, rectangles are trisected along
/// their longest sides, and potentially optimal rectangles are selected from
/// the lower-right convex hull of (size, value). Evaluation order is fixed, so
/// the evaluations made under a smaller budget are a prefix of those made under
/// a larger one. Non-finite objective values mark a rectangle as worthless.
/// Throws OptimizerError if every evaluation was non-finite.
DirectResult direct_maximize(const Objective& objective, const BoxBounds& bounds,
                             const DirectOptions& options = {});

// ---------------------------------------------------------------------------
// L-BFGS

struct LbfgsOptions {
  std::size_t restarts = 16;
  std::size_t memory = 10;
  OptimizerBudget budget{500, 200, 1e-10};
  std::uint64_t seed = 0;
};

/// Single projected L-BFGS descent from `start`, minimizing. Iterates are
/// clipped to `bounds`; the line search enforces the strong Wolfe conditions
/// along the projected path and falls back to backtracking.
struct LocalSearch {
  Vector x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  bool line_search_failed = false;
};

using ValueAndGradient = std::function<double(const Vector&, Vector& gradient)>;

LocalSearch lbfgs_minimize(const ValueAndGradient& fg, const Vector& start, const BoxBounds& bounds,
                           std::size_t memory, const OptimizerBudget& budget);

/// Central finite differences with step 1e-6 of each box width, one-sided at
/// the bounds.
Vector finite_difference_gradient(const Objective& objective, const Vector& x,
                                  const BoxBounds& bounds);

/// Multi-restart maximization. Start points are drawn uniformly from the box
/// interior with a stream seeded by `options.seed`; the i-th start does not
/// depend on the restart count. Without `gradient`, finite differences are
/// used.
OptimumResult lbfgs_maximize(const Objective& objective, const std::optional<GradientFn>& gradient,
                             const BoxBounds& bounds, const LbfgsOptions& options = {});

}  // namespace bds

#include "bds/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace bds {
namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;

struct Trial {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
  Vector x;
  Vector grad;
};

/// phi(a) = f(P(x + a d)) with derivative taken over the unclipped coordinates.
class ProjectedLine {
 public:
  ProjectedLine(const ValueAndGradient& fg, const BoxBounds& bounds, const Vector& x,
                const Vector& d, std::size_t& evals)
      : fg_(fg), bounds_(bounds), x_(x), d_(d), evals_(evals) {}

  Trial at(double step) {
    Trial t;
    t.step = step;
    const Vector raw = x_ + step * d_;
    t.x = bounds_.clamp(raw);
    t.value = fg_(t.x, t.grad);
    ++evals_;
    t.slope = 0.0;
    if (std::isfinite(t.value)) {
      for (Eigen::Index i = 0; i < raw.size(); ++i)
        if (raw[i] == t.x[i]) t.slope += t.grad[i] * d_[i];
    }
    return t;
  }

 private:
  const ValueAndGradient& fg_;
  const BoxBounds& bounds_;
  const Vector& x_;
  const Vector& d_;
  std::size_t& evals_;
};

bool sufficient_decrease(const Trial& t, double f0, double slope0) {
  return std::isfinite(t.value) && t.value <= f0 + kArmijo * t.step * slope0;
}

/// Strong Wolfe search (bracketing + zoom), falling back to backtracking on
/// the Armijo condition alone. Returns false when no acceptable step exists.
bool line_search(ProjectedLine& line, double f0, double slope0, double initial_step,
                 std::size_t eval_limit, const std::size_t& evals, Trial& accepted) {
  const auto wolfe = [&](const Trial& t) { return std::abs(t.slope) <= -kCurvature * slope0; };

  auto zoom = [&](Trial lo, Trial hi) -> bool {
    for (int j = 0; j < 30 && evals < eval_limit; ++j) {
      const double step = 0.5 * (lo.step + hi.step);
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
      Trial t = line.at(step);
      if (!sufficient_decrease(t, f0, slope0) || t.value >= lo.value) {
        hi = std::move(t);
      } else {
        if (wolfe(t)) {
          accepted = std::move(t);
          return true;
        }
        if (t.slope * (hi.step - lo.step) >= 0) hi = lo;
        lo = std::move(t);
      }
    }
    if (lo.step > 0 && sufficient_decrease(lo, f0, slope0)) {
      accepted = std::move(lo);
      return true;
    }
    return false;
  };

  Trial prev;
  prev.step = 0.0;
  prev.value = f0;
  prev.slope = slope0;
  double step = initial_step;
  for (int i = 0; i < 40 && evals < eval_limit; ++i) {
    Trial t = line.at(step);
    if (!sufficient_decrease(t, f0, slope0) || (i > 0 && t.value >= prev.value)) {
      if (zoom(prev, t)) return true;
      break;
    }
    if (wolfe(t)) {
      accepted = std::move(t);
      return true;
    }
    if (t.slope >= 0) {
      if (zoom(t, prev)) return true;
      break;
    }
    prev = std::move(t);
    step *= 2.0;
  }
  if (prev.step > 0) {
    accepted = std::move(prev);
    return true;
  }

  // Backtracking fallback.
  step = initial_step;
  for (int i = 0; i < 60 && evals < eval_limit; ++i) {
    step *= 0.5;
    Trial t = line.at(step);
    if (sufficient_decrease(t, f0, slope0) && t.value < f0) {
      accepted = std::move(t);
      return true;
    }
  }
  return false;
}

/// Zeroes gradient components that point out of the box at active bounds.
Vector projected_gradient(const Vector& x, const Vector& g, const BoxBounds& bounds) {
  Vector pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= bounds.lower()[i] && g[i] > 0) || (x[i] >= bounds.upper()[i] && g[i] < 0))
      pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

LocalSearch lbfgs_minimize(const ValueAndGradient& fg, const Vector& start, const BoxBounds& bounds,
                           std::size_t memory, const OptimizerBudget& budget) {
  require(static_cast<std::size_t>(start.size()) == bounds.dim(),
          "lbfgs_minimize: start dimension mismatch");
  require(memory >= 1, "lbfgs_minimize: memory must be >= 1");
  require(budget.max_evals >= 1, "lbfgs_minimize: max_evals must be >= 1");

  LocalSearch out;
  out.x = bounds.clamp(start);
  Vector g;
  out.value = fg(out.x, g);
  out.evaluations = 1;
  if (!std::isfinite(out.value)) {
    out.line_search_failed = true;
    return out;
  }

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  bool moved = false;

  for (; out.iterations < budget.max_iters && out.evaluations < budget.max_evals;
       ++out.iterations) {
    const Vector pg = projected_gradient(out.x, g, bounds);
    if (pg.lpNorm<Eigen::Infinity>() <= budget.tol) break;

    // Two-loop recursion.
    Vector q = pg;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += s_hist[k] * (alpha[k] - beta);
    }
    Vector d = -q;
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (pg[i] == 0.0) d[i] = 0.0;

    double slope = d.dot(pg);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -pg;
      slope = d.dot(pg);
    }
    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / pg.norm()) : 1.0;

    ProjectedLine line(fg, bounds, out.x, d, out.evaluations);
    Trial next;
    if (!line_search(line, out.value, slope, initial_step, budget.max_evals, out.evaluations,
                     next)) {
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      out.line_search_failed = !moved;
      break;
    }
    moved = true;

    const Vector s = next.x - out.x;
    const Vector y = next.grad - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double previous = out.value;
    out.x = std::move(next.x);
    out.value = next.value;
    g = std::move(next.grad);
    if (std::abs(previous - out.value) <= budget.tol * std::max(1.0, std::abs(out.value))) {
      ++out.iterations;
      break;
    }
  }
  return out;
}

Vector finite_difference_gradient(const Objective& objective, const Vector& x,
                                  const BoxBounds& bounds) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (bounds.upper()[i] - bounds.lower()[i]);
    Vector xp = x, xm = x;
    xp[i] = std::min(x[i] + h, bounds.upper()[i]);
    xm[i] = std::max(x[i] - h, bounds.lower()[i]);
    g[i] = (objective(xp) - objective(xm)) / (xp[i] - xm[i]);
  }
  return g;
}

OptimumResult lbfgs_maximize(const Objective& objective, const std::optional<GradientFn>& gradient,
                             const BoxBounds& bounds, const LbfgsOptions& options) {
  require(options.restarts >= 1, "lbfgs_maximize: restarts must be >= 1");

  const ValueAndGradient fg = [&](const Vector& x, Vector& grad) {
    const double v = objective(x);
    grad = gradient ? (*gradient)(x) : finite_difference_gradient(objective, x, bounds);
    grad = -grad;
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };

  auto gen = rng::stream(options.seed, rng::Tag::kExplore, 0);
  OptimumResult best;
  best.value = -std::numeric_limits<double>::infinity();
  bool all_failed = true;
  bool have_best = false;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    const Vector start = rng::uniform_in(bounds, gen);
    const LocalSearch ls = lbfgs_minimize(fg, start, bounds, options.memory, options.budget);
    best.evaluations += ls.evaluations;
    all_failed = all_failed && ls.line_search_failed;
    const double value = -ls.value;
    if (!have_best || value > best.value) {
      best.x = ls.x;
      best.value = value;
      have_best = true;
    }
  }
  // A failed local search never moves off its start, so best.x is then the best sampled start.
  best.warning = all_failed;
  return best;
}

}  // namespace bds

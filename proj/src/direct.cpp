#include "bds/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace bds {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rectangles live in the unit cube; side length along dim i is 3^-level[i].
struct Rect {
  Vector center;
  std::vector<int> level;
  double value;  // minimization form: -objective, +inf when non-finite
  double size;   // center-to-vertex distance
};

double rect_size(std::vector<int> level) {
  std::sort(level.begin(), level.end());
  double sum = 0.0;
  for (int l : level) sum += std::pow(3.0, -2.0 * l);
  return 0.5 * std::sqrt(sum);
}

class DirectSearch {
 public:
  DirectSearch(const Objective& objective, const BoxBounds& bounds, const DirectOptions& options)
      : objective_(objective), bounds_(bounds), options_(options) {}

  DirectResult run();

 private:
  bool budget_left() const { return evaluations_ < options_.budget.max_evals; }
  double evaluate(const Vector& unit);
  std::vector<std::size_t> potentially_optimal() const;
  bool divide(std::size_t index);

  const Objective& objective_;
  const BoxBounds& bounds_;
  const DirectOptions& options_;
  std::vector<Rect> rects_;
  std::vector<std::pair<Vector, double>> history_;
  std::size_t evaluations_ = 0;
};

double DirectSearch::evaluate(const Vector& unit) {
  const Vector x = bounds_.clamp(bounds_.from_unit(unit));
  const double v = objective_(x);
  ++evaluations_;
  history_.emplace_back(x, v);
  return std::isfinite(v) ? -v : kInf;
}

std::vector<std::size_t> DirectSearch::potentially_optimal() const {
  // Best rectangle of every size class; the first one wins ties.
  std::map<double, std::size_t> best_of_size;
  double fmin = kInf;
  for (std::size_t i = 0; i < rects_.size(); ++i) {
    const Rect& r = rects_[i];
    fmin = std::min(fmin, r.value);
    auto it = best_of_size.find(r.size);
    if (it == best_of_size.end() || r.value < rects_[it->second].value) best_of_size[r.size] = i;
  }
  if (!std::isfinite(fmin)) {
    // Nothing finite yet: keep splitting the largest rectangle.
    return {best_of_size.rbegin()->second};
  }

  std::vector<std::size_t> classes;
  for (const auto& [size, index] : best_of_size)
    if (std::isfinite(rects_[index].value)) classes.push_back(index);

  // Start the hull at the minimum value, preferring the largest size among ties.
  std::size_t start = 0;
  for (std::size_t k = 0; k < classes.size(); ++k)
    if (rects_[classes[k]].value <= rects_[classes[start]].value) start = k;

  std::vector<std::size_t> hull;
  for (std::size_t k = start; k < classes.size(); ++k) {
    const Rect& p = rects_[classes[k]];
    while (hull.size() >= 2) {
      const Rect& a = rects_[hull[hull.size() - 2]];
      const Rect& b = rects_[hull.back()];
      const double cross =
          (b.size - a.size) * (p.value - a.value) - (b.value - a.value) * (p.size - a.size);
      if (cross > 0) break;
      hull.pop_back();
    }
    hull.push_back(classes[k]);
  }

  std::vector<std::size_t> selected;
  const double threshold = fmin - options_.epsilon * std::abs(fmin);
  for (std::size_t k = 0; k < hull.size(); ++k) {
    const Rect& r = rects_[hull[k]];
    if (k + 1 == hull.size()) {
      selected.push_back(hull[k]);
      continue;
    }
    const Rect& next = rects_[hull[k + 1]];
    const double slope = (next.value - r.value) / (next.size - r.size);
    if (r.value - slope * r.size <= threshold) selected.push_back(hull[k]);
  }
  return selected;
}

bool DirectSearch::divide(std::size_t index) {
  const Rect parent = rects_[index];
  const int min_level = *std::min_element(parent.level.begin(), parent.level.end());
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < parent.level.size(); ++i)
    if (parent.level[i] == min_level) dims.push_back(i);

  const double delta = std::pow(3.0, -(min_level + 1));
  struct Probe {
    std::size_t dim;
    Vector plus, minus;
    double v_plus, v_minus;
  };
  std::vector<Probe> probes;
  for (std::size_t i : dims) {
    Probe p{i, parent.center, parent.center, kInf, kInf};
    p.plus[static_cast<Eigen::Index>(i)] += delta;
    p.minus[static_cast<Eigen::Index>(i)] -= delta;
    if (!budget_left()) return false;
    p.v_plus = evaluate(p.plus);
    if (!budget_left()) return false;
    p.v_minus = evaluate(p.minus);
    probes.push_back(std::move(p));
  }
  std::stable_sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) {
    return std::min(a.v_plus, a.v_minus) < std::min(b.v_plus, b.v_minus);
  });

  std::vector<int> level = parent.level;
  for (const Probe& p : probes) {
    level[p.dim] += 1;
    const double size = rect_size(level);
    rects_.push_back({p.plus, level, p.v_plus, size});
    rects_.push_back({p.minus, level, p.v_minus, size});
  }
  rects_[index].level = level;
  rects_[index].size = rect_size(level);
  return true;
}

DirectResult DirectSearch::run() {
  const auto dim = bounds_.dim();
  rects_.push_back({Vector::Constant(static_cast<Eigen::Index>(dim), 0.5),
                    std::vector<int>(dim, 0), kInf, rect_size(std::vector<int>(dim, 0))});
  rects_[0].value = evaluate(rects_[0].center);

  for (std::size_t iter = 0; iter < options_.budget.max_iters && budget_left(); ++iter) {
    const auto selected = potentially_optimal();
    bool complete = true;
    double largest = 0.0;
    for (std::size_t index : selected) {
      if (!divide(index)) {
        complete = false;
        break;
      }
    }
    if (!complete) break;
    for (const Rect& r : rects_) largest = std::max(largest, r.size);
    if (largest < options_.budget.tol) break;
  }

  DirectResult out;
  out.evaluations = evaluations_;
  std::vector<std::size_t> order(history_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = std::isfinite(history_[a].second) ? history_[a].second : -kInf;
    const double vb = std::isfinite(history_[b].second) ? history_[b].second : -kInf;
    return va > vb;
  });
  if (order.empty() || !std::isfinite(history_[order.front()].second))
    throw OptimizerError("direct_maximize: every objective evaluation was non-finite");

  out.x = history_[order.front()].first;
  out.value = history_[order.front()].second;
  for (std::size_t i : order) {
    if (out.top.size() >= options_.keep_top) break;
    if (!std::isfinite(history_[i].second)) break;
    const bool duplicate = std::any_of(out.top.begin(), out.top.end(),
                                       [&](const auto& t) { return t.first == history_[i].first; });
    if (!duplicate) out.top.push_back(history_[i]);
  }
  return out;
}

}  // namespace

DirectResult direct_maximize(const Objective& objective, const BoxBounds& bounds,
                             const DirectOptions& options) {
  require(options.budget.max_evals >= 1, "direct_maximize: max_evals must be >= 1");
  require(options.epsilon >= 0.0, "direct_maximize: epsilon must be >= 0");
  return DirectSearch(objective, bounds, options).run();
}

}  // namespace bds

#include "ppesmoc/lbfgsb.hpp"

#include <cmath>
#include <deque>

namespace ppesmoc {

namespace {

Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Variables pinned at a bound with the gradient pushing outward.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Vector& x, const Vector& g, const Vector& lo,
                                                 const Vector& hi) {
  Eigen::Array<bool, Eigen::Dynamic, 1> a(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    a[i] = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
  return a;
}

}  // namespace

BoxMinimizeResult minimize_box(const std::function<double(const Vector&, Vector&)>& objective,
                               Vector x0, const Vector& lo, const Vector& hi,
                               const BoxMinimizeOptions& options) {
  BoxMinimizeResult res;
  res.x = project(x0, lo, hi);
  Vector g(res.x.size());
  res.value = objective(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) return res;

  std::deque<std::pair<Vector, Vector>> memory;
  for (int it = 0; it < options.max_iters; ++it) {
    const auto active = active_set(res.x, g, lo, hi);
    Vector pg = g;
    for (Eigen::Index i = 0; i < pg.size(); ++i)
      if (active[i]) pg[i] = 0.0;
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    // Two-loop recursion restricted to free variables.
    Vector q = pg;
    std::vector<double> alpha(memory.size());
    for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = memory[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.squaredNorm();
    } else {
      q /= std::max(1.0, pg.norm());
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double beta = y.dot(q) / y.dot(s);
      q += (alpha[i] - beta) * s;
    }
    Vector dir = -q;
    for (Eigen::Index i = 0; i < dir.size(); ++i)
      if (active[i]) dir[i] = 0.0;
    if (dir.dot(pg) >= 0.0) {
      dir = -pg / std::max(1.0, pg.norm());
      memory.clear();
    }

    // Backtracking along the projected path.
    double step = 1.0;
    bool moved = false;
    Vector x_new, g_new(g.size());
    double f_new = 0.0;
    for (int ls = 0; ls < 30; ++ls) {
      x_new = project(res.x + step * dir, lo, hi);
      const Vector delta = x_new - res.x;
      if (delta.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = objective(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * g.dot(delta)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!moved) break;

    const Vector s = x_new - res.x;
    const Vector y = g_new - g;
    const double f_old = res.value;
    res.x = x_new;
    res.value = f_new;
    g = g_new;
    if (s.dot(y) > 1e-12 * y.squaredNorm()) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    if (std::abs(f_old - f_new) <= options.function_tolerance * (1.0 + std::abs(f_old))) break;
  }
  return res;
}

}  // namespace ppesmoc

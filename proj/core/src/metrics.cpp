#include "ppesmoc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "ppesmoc/normal.hpp"
#include "ppesmoc/pareto.hpp"

namespace ppesmoc {

double hypervolume_2d(const Matrix& front, const Vector& ref) {
  if (front.cols() != 2 && front.rows() > 0)
    throw std::invalid_argument("hypervolume_2d: only two objectives are supported");
  if (ref.size() != 2) throw std::invalid_argument("hypervolume_2d: reference must have size 2");
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < front.rows(); ++i)
    if (front(i, 0) < ref[0] && front(i, 1) < ref[1]) idx.push_back(static_cast<int>(i));
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return front(a, 0) != front(b, 0) ? front(a, 0) < front(b, 0) : front(a, 1) < front(b, 1);
  });
  double area = 0.0;
  double best = ref[1];
  for (int i : idx) {
    if (front(i, 1) >= best) continue;
    area += (ref[0] - front(i, 0)) * (best - front(i, 1));
    best = front(i, 1);
  }
  return area;
}

Recommendation recommend(const std::vector<std::vector<GPModel>>& models, int num_objectives,
                         const Points& grid, double feasibility_threshold) {
  if (models.empty()) throw std::invalid_argument("recommend: no models");
  const int g_count = static_cast<int>(models[0].size());
  const int n = static_cast<int>(grid.rows());
  const double inv_h = 1.0 / static_cast<double>(models.size());
  Matrix obj = Matrix::Zero(n, num_objectives);
  Matrix prob = Matrix::Zero(n, g_count - num_objectives);
  Vector mean, var;
  for (const auto& hm : models) {
    for (int g = 0; g < g_count; ++g) {
      hm[g].predict_marginal(grid, mean, var);
      if (g < num_objectives) {
        obj.col(g) += inv_h * mean;
      } else {
        for (int i = 0; i < n; ++i) {
          const double sd = std::sqrt(std::max(var[i], 0.0));
          const double p = sd > 0.0 ? normal::cdf(mean[i] / sd) : (mean[i] >= 0.0 ? 1.0 : 0.0);
          prob(i, g - num_objectives) += inv_h * p;
        }
      }
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (prob.cols() == 0 || prob.row(i).minCoeff() >= feasibility_threshold) keep.push_back(i);
  Matrix kept(keep.size(), num_objectives);
  for (std::size_t i = 0; i < keep.size(); ++i) kept.row(i) = obj.row(keep[i]);
  const std::vector<int> front = pareto_front(kept);
  Recommendation rec;
  rec.points.resize(front.size(), grid.cols());
  rec.objectives.resize(front.size(), num_objectives);
  for (std::size_t i = 0; i < front.size(); ++i) {
    rec.grid_indices.push_back(keep[front[i]]);
    rec.points.row(i) = grid.row(keep[front[i]]);
    rec.objectives.row(i) = kept.row(front[i]);
  }
  return rec;
}

double log_relative_hv_gap(double hv_truth, double hv_rec) {
  if (!(hv_truth > 0.0)) throw std::invalid_argument("log_relative_hv_gap: hv_truth must be > 0");
  const double rec = std::clamp(hv_rec, 0.0, hv_truth);
  return std::log((hv_truth - rec) / hv_truth + 1e-12);
}

Points problem_grid(const ProblemSpec& problem, int points_per_dim) {
  const int d = problem.dim;
  if (points_per_dim < 2) throw std::invalid_argument("problem_grid: need >= 2 points per dim");
  if (d > 2) {
    Rng rng(derive_seed(0x9e1d, static_cast<std::uint64_t>(points_per_dim)));
    return uniform_points(problem.bounds, points_per_dim * points_per_dim, rng);
  }
  long total = 1;
  for (int t = 0; t < d; ++t) total *= points_per_dim;
  Points out(total, d);
  for (long i = 0; i < total; ++i) {
    long rem = i;
    for (int t = 0; t < d; ++t) {
      const int step = static_cast<int>(rem % points_per_dim);
      rem /= points_per_dim;
      const double lo = problem.bounds(t, 0), hi = problem.bounds(t, 1);
      out(i, t) = lo + (hi - lo) * step / (points_per_dim - 1);
    }
  }
  return out;
}

namespace {

struct GridValues {
  Matrix objectives;
  std::vector<char> feasible;
};

GridValues evaluate_grid(const ProblemSpec& problem, int points_per_dim) {
  const Points grid = problem_grid(problem, points_per_dim);
  GridValues out;
  out.objectives.resize(grid.rows(), problem.num_objectives);
  out.feasible.resize(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Evaluation e = evaluate(problem, grid.row(i).transpose());
    out.objectives.row(i) = e.objectives.transpose();
    out.feasible[i] = e.constraints.size() == 0 || e.constraints.minCoeff() >= 0.0;
  }
  return out;
}

}  // namespace

Vector reference_point(const ProblemSpec& problem, int points_per_dim) {
  const GridValues g = evaluate_grid(problem, points_per_dim);
  const Vector hi = g.objectives.colwise().maxCoeff().transpose();
  const Vector lo = g.objectives.colwise().minCoeff().transpose();
  return hi + 0.01 * (hi - lo);
}

double true_hypervolume(const ProblemSpec& problem, const Vector& ref, int points_per_dim) {
  static std::mutex mutex;
  static std::map<std::string, double> cache;
  std::ostringstream key;
  key.precision(17);
  key << problem.name << '|' << points_per_dim;
  for (Eigen::Index i = 0; i < ref.size(); ++i) key << '|' << ref[i];
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key.str()); it != cache.end()) return it->second;
  }
  const GridValues g = evaluate_grid(problem, points_per_dim);
  std::vector<int> feas;
  for (std::size_t i = 0; i < g.feasible.size(); ++i)
    if (g.feasible[i]) feas.push_back(static_cast<int>(i));
  Matrix pts(feas.size(), problem.num_objectives);
  for (std::size_t i = 0; i < feas.size(); ++i) pts.row(i) = g.objectives.row(feas[i]);
  const double hv = hypervolume_2d(pts, ref);
  std::lock_guard lock(mutex);
  cache.emplace(key.str(), hv);
  return hv;
}

}  // namespace ppesmoc

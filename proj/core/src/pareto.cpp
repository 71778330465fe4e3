#include "ppesmoc/pareto.hpp"

#include <algorithm>
#include <numeric>

namespace ppesmoc {

namespace {

bool dominates_rows(const Matrix& v, int a, int b) {
  bool strict = false;
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    if (v(a, k) > v(b, k)) return false;
    if (v(a, k) < v(b, k)) strict = true;
  }
  return strict;
}

}  // namespace

bool dominates(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dominates: length mismatch");
  bool strict = false;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] > b[k]) return false;
    if (a[k] < b[k]) strict = true;
  }
  return strict;
}

std::vector<int> pareto_front(const Matrix& values) {
  const int n = static_cast<int>(values.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // A dominator always precedes the dominated row lexicographically.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index k = 0; k < values.cols(); ++k)
      if (values(a, k) != values(b, k)) return values(a, k) < values(b, k);
    return a < b;
  });
  std::vector<int> front;
  for (int i : order) {
    bool dominated = false;
    for (int f : front)
      if (dominates_rows(values, f, i)) {
        dominated = true;
        break;
      }
    if (!dominated) front.push_back(i);
  }
  std::sort(front.begin(), front.end());
  return front;
}

ParetoSample sample_pareto_set(const std::vector<GPModel>& models, int num_objectives,
                               const Bounds& bounds, Rng& rng, const ParetoOptions& options,
                               const Points* candidates) {
  if (options.grid_size < 1) throw std::invalid_argument("sample_pareto_set: grid_size < 1");
  if (models.empty() || num_objectives < 1)
    throw std::invalid_argument("sample_pareto_set: no objective models");
  const int total = static_cast<int>(models.size());
  const int num_constraints = total - num_objectives;
  const int d = models[0].dim();
  for (const auto& m : models)
    if (m.dim() != d) throw std::invalid_argument("sample_pareto_set: dimension mismatch");

  ParetoSample sample;
  for (const auto& m : models) sample.function_samples.push_back(sample_function(m, options.num_features, rng));

  const Points base = candidates ? *candidates : uniform_points(bounds, options.grid_size, rng);
  const Points& observed = models[0].inputs();
  Points grid(base.rows() + observed.rows(), d);
  grid << base, observed;

  Matrix obj(grid.rows(), num_objectives);
  Matrix con(grid.rows(), num_constraints);
  for (int b = 0; b < total; ++b) {
    const Vector v = sample.function_samples[b].evaluate(grid);
    if (b < num_objectives)
      obj.col(b) = v;
    else
      con.col(b - num_objectives) = v;
  }

  std::vector<int> feasible;
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    if (num_constraints == 0 || con.row(i).minCoeff() >= 0.0) feasible.push_back(static_cast<int>(i));

  std::vector<int> chosen;
  if (feasible.empty()) {
    Eigen::Index best = 0;
    (-con.array().min(0.0)).rowwise().sum().minCoeff(&best);
    chosen.push_back(static_cast<int>(best));
    sample.infeasible_fallback = true;
  } else {
    Matrix fobj(feasible.size(), num_objectives);
    for (std::size_t i = 0; i < feasible.size(); ++i) fobj.row(i) = obj.row(feasible[i]);
    for (int i : pareto_front(fobj)) chosen.push_back(feasible[i]);
    if (static_cast<int>(chosen.size()) > options.max_points) {
      std::shuffle(chosen.begin(), chosen.end(), rng);
      chosen.resize(options.max_points);
      std::sort(chosen.begin(), chosen.end());
    }
  }

  const int m = static_cast<int>(chosen.size());
  sample.points.resize(m, d);
  sample.objective_values.resize(m, num_objectives);
  sample.constraint_values.resize(m, num_constraints);
  for (int i = 0; i < m; ++i) {
    sample.points.row(i) = grid.row(chosen[i]);
    sample.objective_values.row(i) = obj.row(chosen[i]);
    sample.constraint_values.row(i) = con.row(chosen[i]);
  }
  return sample;
}

}  // namespace ppesmoc

#pragma once

#include <vector>

#include "ppesmoc/gp.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

// a <= b componentwise with at least one strict inequality (minimisation).
bool dominates(const Vector& a, const Vector& b);

// Row indices of the non-dominated rows, ascending.
std::vector<int> pareto_front(const Matrix& values);

struct ParetoSample {
  Points points;
  Matrix objective_values;
  Matrix constraint_values;
  // One per black-box, objectives first.
  std::vector<FunctionSample> function_samples;
  bool infeasible_fallback = false;

  int size() const { return static_cast<int>(points.rows()); }
};

struct ParetoOptions {
  int grid_size = 1000;
  int max_points = 50;
  int num_features = 500;
};

// models holds every black-box, objectives first. When candidates is given it
// replaces the random grid; observed inputs are always included.
ParetoSample sample_pareto_set(const std::vector<GPModel>& models, int num_objectives,
                               const Bounds& bounds, Rng& rng, const ParetoOptions& options = {},
                               const Points* candidates = nullptr);

}  // namespace ppesmoc

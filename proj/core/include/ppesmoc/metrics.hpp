#pragma once

#include <vector>

#include "ppesmoc/gp.hpp"
#include "ppesmoc/problems.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

// Area dominated by the rows of front inside the box bounded above by ref
// (minimisation). Only two objectives are supported.
double hypervolume_2d(const Matrix& front, const Vector& ref);

struct Recommendation {
  Points points;
  Matrix objectives;  // hyper-averaged posterior means
  std::vector<int> grid_indices;
};

// models[h][b]: hyper sample h, black-box b (objectives first). A grid point is
// kept when every constraint has hyper-averaged P(c >= 0) >= threshold; the
// result is the non-dominated subset of the mean objectives.
Recommendation recommend(const std::vector<std::vector<GPModel>>& models, int num_objectives,
                         const Points& grid, double feasibility_threshold = 0.95);

double log_relative_hv_gap(double hv_truth, double hv_rec);

// Evaluation grid of a problem: a full tensor grid with points_per_dim values
// per dimension when dim <= 2, otherwise points_per_dim^2 uniform random points.
Points problem_grid(const ProblemSpec& problem, int points_per_dim);

// Componentwise max of the objectives over problem_grid (constraints ignored)
// plus 1% of the objective range.
Vector reference_point(const ProblemSpec& problem, int points_per_dim = 400);

// Hypervolume of the feasible Pareto front over problem_grid. Cached per
// (problem name, grid, ref).
double true_hypervolume(const ProblemSpec& problem, const Vector& ref, int points_per_dim = 400);

}  // namespace ppesmoc

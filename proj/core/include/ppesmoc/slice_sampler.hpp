#pragma once

#include <functional>
#include <vector>

#include "ppesmoc/types.hpp"

namespace ppesmoc {

// One stepping-out / shrinkage update of a univariate slice sampler.
// log_density may return -inf or NaN outside the support.
double slice_step(const std::function<double(double)>& log_density, double x0, double width,
                  int max_steps_out, Rng& rng);

// Coordinate-wise slice sweep over the listed coordinates of x.
void slice_sweep(const std::function<double(const Vector&)>& log_density, Vector& x,
                 const std::vector<int>& coords, double width, int max_steps_out, Rng& rng);

}  // namespace ppesmoc

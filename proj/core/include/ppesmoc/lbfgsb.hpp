#pragma once

#include <functional>

#include "ppesmoc/types.hpp"

namespace ppesmoc {

struct BoxMinimizeOptions {
  int max_iters = 100;
  int memory = 10;
  double gradient_tolerance = 1e-8;
  double function_tolerance = 1e-10;
};

struct BoxMinimizeResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

// Projected limited-memory BFGS for min f(x) subject to lo <= x <= hi.
// objective returns f(x) and writes the gradient.
BoxMinimizeResult minimize_box(const std::function<double(const Vector&, Vector&)>& objective,
                               Vector x0, const Vector& lo, const Vector& hi,
                               const BoxMinimizeOptions& options = {});

}  // namespace ppesmoc

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ppesmoc/gp.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

struct Evaluation {
  Vector objectives;
  Vector constraints;  // feasible iff every entry >= 0
};

struct ProblemSpec {
  std::string name;
  int dim = 0;
  Bounds bounds;
  int num_objectives = 0;
  int num_constraints = 0;
  std::function<Evaluation(const Vector&)> evaluator;
  Vector noise_std_objectives;
  Vector noise_std_constraints;
};

// Throws std::domain_error if x lies outside the bounds.
Evaluation evaluate(const ProblemSpec& problem, const Vector& x);
Evaluation evaluate_noisy(const ProblemSpec& problem, const Vector& x, Rng& rng);

// bnh, srn, tnk, osy, constr, two_bar_truss (noiseless).
ProblemSpec make_benchmark(std::string_view name);
std::vector<std::string> benchmark_names();

struct SyntheticGPProblem {
  std::uint64_t seed = 0;
  int dim = 0;
  int num_objectives = 0;
  int num_constraints = 0;
  KernelParams kernel;
  std::vector<FunctionSample> functions;
  ProblemSpec spec;
};

// Frozen GP-prior draws on the unit cube; noise std is sqrt(kernel.noise_var).
SyntheticGPProblem make_synthetic(std::uint64_t seed, int dim, int num_objectives,
                                  int num_constraints, const KernelParams& kernel,
                                  int num_features = 500);

// max - min of every black-box over a uniform probe (objectives then constraints).
Vector function_ranges(const ProblemSpec& problem, int n_probe = 100000,
                       std::uint64_t seed = 7);

// Noise std set to fraction * range per black-box; ranges cached by problem name.
ProblemSpec with_range_noise(ProblemSpec problem, double fraction = 0.01);

}  // namespace ppesmoc

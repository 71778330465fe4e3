#pragma once

#include <cstdint>
#include <vector>

#include "ppesmoc/acquisition.hpp"
#include "ppesmoc/problems.hpp"

namespace fixture {

struct InstanceOptions {
  std::uint64_t seed = 1;
  int dim = 1;
  int num_objectives = 2;
  int num_constraints = 1;
  int num_observations = 5;
  int num_pareto_samples = 2;
  int num_hyper = 1;
  double lengthscale = 0.3;
  double noise_var = 1e-3;
  int pareto_grid = 200;
  int pareto_max = 50;
  int num_features = 300;
  // Replaces the random Pareto grid when non-empty.
  ppesmoc::Points pareto_candidates;
};

struct Instance {
  ppesmoc::SyntheticGPProblem problem;
  ppesmoc::Points x;
  std::vector<ppesmoc::Vector> y;
  std::vector<std::vector<ppesmoc::GPModel>> models;
  ppesmoc::AcquisitionContext ctx;
};

// GP-prior problem on the unit cube, observed at random points, with models
// at the generating hyper-parameters (hyper sample h scales the lengthscale by
// 1 + 0.1 h) and a context built from fresh Pareto samples.
Instance make_instance(const InstanceOptions& options);

ppesmoc::KernelParams kernel(int dim, double lengthscale, double noise_var);

}  // namespace fixture

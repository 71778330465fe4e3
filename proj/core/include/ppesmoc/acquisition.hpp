#pragma once

#include <span>
#include <vector>

#include "ppesmoc/batch.hpp"
#include "ppesmoc/ep.hpp"
#include "ppesmoc/gp.hpp"
#include "ppesmoc/pareto.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

// One Pareto-set sample paired with a hyper-parameter sample and its EP fit.
struct AcquisitionState {
  int hyper_index = 0;
  ParetoSample pareto;
  ConditionedState conditioned;
  BatchConditioner conditioner;
};

struct AcquisitionContext {
  int num_objectives = 0;
  int num_constraints = 0;
  Bounds bounds;
  // models[h][b]: hyper sample h, black-box b (objectives first).
  std::vector<std::vector<GPModel>> models;
  std::vector<AcquisitionState> states;

  int dim() const { return static_cast<int>(bounds.rows()); }
  int num_blackboxes() const { return num_objectives + num_constraints; }
};

struct ContextOptions {
  int num_pareto_samples = 10;
  ParetoOptions pareto;
  EPOptions ep;
};

// Pareto sample s is paired with hyper sample s mod H.
AcquisitionContext make_context(std::vector<std::vector<GPModel>> models, int num_objectives,
                                const Bounds& bounds, std::vector<ParetoSample> samples,
                                const EPOptions& ep = {});

AcquisitionContext build_context(const SurrogateSet& surrogates, const Bounds& bounds,
                                 const ContextOptions& options, Rng& rng);

// 0.5 (n log 2 pi e + log|cov|), summed over blocks.
double entropy_gaussian(const Matrix& cov);
double entropy_gaussian(std::span<const Matrix> blocks);

struct AlphaValue {
  double value = 0.0;
  // Contribution of every black-box; sums to value.
  Vector per_blackbox;
  Matrix gradient;
};

AlphaValue alpha_terms(const AcquisitionContext& ctx, const Points& x, bool with_gradient = false);
double alpha(const AcquisitionContext& ctx, const Points& x);
std::pair<double, Matrix> alpha_with_grad(const AcquisitionContext& ctx, const Points& x);
double alpha_sequential(const AcquisitionContext& ctx, const Vector& x);

struct BatchProposal {
  Points x;
  double value = 0.0;
  Matrix gradient;
};

struct OptimizeOptions {
  int n_restarts = 5;
  int max_iters = 100;
};

BatchProposal optimize_batch(const AcquisitionContext& ctx, int batch_size,
                             const OptimizeOptions& options, Rng& rng);

}  // namespace ppesmoc

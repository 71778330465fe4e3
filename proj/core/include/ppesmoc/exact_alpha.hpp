#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ppesmoc/acquisition.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

class InsufficientSamplesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExactAlphaOptions {
  int n_samples = 10000;
  int neighbours = 3;
  // Largest batch that value() accepts; one noise stream per batch slot.
  int max_batch = 2;
  // Skip the Pareto-set rejection step (both sets are unconditioned draws).
  bool accept_all = false;
  double min_acceptance = 1e-4;
  int block = 2048;
};

// Monte Carlo estimate of the acquisition on a fixed candidate grid. Joint
// function draws over grid, observations and each Pareto sample are filtered by
// the exact Pareto-set indicator; entropies of the noisy batch observations
// before and after are estimated with nearest neighbours. Values are on the
// scale of alpha (twice the entropy reduction).
class ExactAlphaOracle {
 public:
  ExactAlphaOracle(const AcquisitionContext& ctx, const Points& grid,
                   const ExactAlphaOptions& options, Rng& rng);

  int grid_size() const { return static_cast<int>(grid_.rows()); }
  const Points& grid() const { return grid_; }

  double value(std::span<const int> grid_indices) const;
  // Per Pareto-sample estimates; their mean is value().
  Vector state_values(std::span<const int> grid_indices) const;
  // Accepted / drawn, per Pareto sample.
  const std::vector<double>& acceptance_rates() const { return acceptance_; }

 private:
  struct StateDraws {
    // [blackbox] n x grid, standardised by the output scale.
    std::vector<Matrix> before, after;
    // [slot][blackbox] n x grid noise, same scale.
    std::vector<std::vector<Matrix>> noise;
  };

  ExactAlphaOptions options_;
  Points grid_;
  int num_blackboxes_ = 0;
  std::vector<StateDraws> states_;
  std::vector<double> acceptance_;
};

double exact_alpha_mc(const AcquisitionContext& ctx, const Points& x, int n_samples, Rng& rng);

}  // namespace ppesmoc

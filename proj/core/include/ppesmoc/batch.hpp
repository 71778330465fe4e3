#pragma once

#include <vector>

#include "ppesmoc/ep.hpp"
#include "ppesmoc/gp.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

// Covariances of every black-box at a batch, observation noise included.
struct BatchCovariances {
  std::vector<Matrix> predictive;
  std::vector<Matrix> conditioned;
};

// Log-determinant reduction of one conditioned state at a batch.
struct BatchReduction {
  // log|predictive| - log|conditioned| per black-box.
  Vector per_blackbox;
  // d(sum of per_blackbox) / dX, same shape as X. Empty unless requested.
  Matrix gradient;
  // Damping used for the batch factors (1 unless a halving was needed).
  double damping = 1.0;
};

// Extends a converged EP state with the batch pair factors. Data and Pareto
// factors are held fixed; the batch factors are refined once from zero.
class BatchConditioner {
 public:
  BatchConditioner(const std::vector<GPModel>& models, int num_objectives,
                   const ConditionedState& state);

  int num_objectives() const { return num_objectives_; }
  int num_blackboxes() const { return static_cast<int>(blocks_.size()); }
  int num_pareto() const { return num_pareto_; }
  int dim() const { return static_cast<int>(points_.cols()); }

  BatchReduction reduction(const Points& x, bool with_gradient) const;

  // Data units.
  BatchCovariances covariances(const Points& x) const;

 private:
  struct Block {
    KernelParams params;  // scaled to unit output scale
    double scale = 1.0;
    double noise = 0.0;
    Points observed;
    Matrix kinv;     // (K_OO + noise I)^{-1}
    Vector weights;  // kinv (y - prior mean)
    double prior_mean = 0.0;
    Matrix cross;    // K_UO kinv
    Matrix gain;     // Lambda (I + Sigma_U Lambda)^{-1}
    Vector shift;    // eta - gain (mu_U + Sigma_U eta)
    Matrix proj;     // Pareto rows of (I + Sigma_U Lambda)^{-1}
    Vector cpd_mean;
    Matrix cpd_cov_pareto;
  };

  struct Forward;
  void forward(const Points& x, std::vector<Forward>& fw) const;
  BatchReduction evaluate(const Points& x, bool with_gradient, BatchCovariances* covs) const;

  int num_objectives_ = 0;
  int num_pareto_ = 0;
  Points points_;
  std::vector<Block> blocks_;
};

BatchCovariances cpd_at_batch(const BatchConditioner& conditioner, const Points& x);

}  // namespace ppesmoc

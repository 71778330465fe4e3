#pragma once

#include <optional>
#include <vector>

#include "ppesmoc/types.hpp"

namespace ppesmoc {

struct KernelParams {
  double amplitude2 = 1.0;
  Vector lengthscales;
  double noise_var = 1e-6;
};

double kernel_matern52(const Vector& x, const Vector& xp, const KernelParams& params);

// Gradient of k(x, xp) with respect to x.
Vector kernel_matern52_grad(const Vector& x, const Vector& xp, const KernelParams& params);

// k(A_i, B_j) for all row pairs.
Matrix kernel_matrix(const Points& a, const Points& b, const KernelParams& params);

struct Prediction {
  Vector mean;
  Matrix cov;
};

class GPModel {
 public:
  GPModel() = default;
  // Throws ModelError if K + noise stays indefinite after the jitter ladder.
  GPModel(Points x, Vector y, KernelParams params, double prior_mean = 0.0,
          double output_scale = 1.0);

  int size() const { return static_cast<int>(x_.rows()); }
  int dim() const { return static_cast<int>(params_.lengthscales.size()); }

  const Points& inputs() const { return x_; }
  const Vector& targets() const { return y_; }
  const KernelParams& params() const { return params_; }
  double prior_mean() const { return prior_mean_; }
  // Typical output magnitude; used to normalise downstream numerics only.
  double output_scale() const { return output_scale_; }
  double jitter() const { return jitter_; }

  // Lower Cholesky factor of K + (noise + jitter) I.
  const Matrix& chol() const { return chol_; }
  // (K + noise I)^{-1} (y - prior_mean)
  const Vector& weights() const { return weights_; }

  // Solves (K + noise I) z = rhs.
  Matrix solve(const Matrix& rhs) const;
  // L^{-1} rhs
  Matrix half_solve(const Matrix& rhs) const;

  Prediction predict(const Points& xs) const;
  Vector predict_mean(const Points& xs) const;
  void predict_marginal(const Points& xs, Vector& mean, Vector& var) const;

  double log_marginal_likelihood() const;

  // Same hyper-parameters, prior mean and scale on a new dataset.
  GPModel refit(Points x, Vector y) const;

 private:
  Points x_;
  Vector y_;
  KernelParams params_;
  double prior_mean_ = 0.0;
  double output_scale_ = 1.0;
  double jitter_ = 0.0;
  Matrix chol_;
  Vector weights_;
};

GPModel fit(const Points& x, const Vector& y, const KernelParams& params,
            double prior_mean = 0.0);

Prediction predict(const GPModel& model, const Points& xs);

struct ParamPrior {
  enum class Kind { LogNormal, LogUniform, Fixed };
  Kind kind = Kind::LogNormal;
  // LogNormal: log value ~ N(a, b^2). LogUniform: value in [a, b]. Fixed: value a.
  double a = 0.0;
  double b = 1.0;

  static ParamPrior log_normal(double log_median, double log_std) {
    return {Kind::LogNormal, log_median, log_std};
  }
  static ParamPrior log_uniform(double lo, double hi) { return {Kind::LogUniform, lo, hi}; }
  static ParamPrior fixed(double value) { return {Kind::Fixed, value, 0.0}; }

  bool is_fixed() const { return kind == Kind::Fixed; }
  double log_density(double log_value) const;
};

struct HyperPrior {
  ParamPrior amplitude2 = ParamPrior::log_normal(0.0, 1.0);
  // One entry per input dimension, or a single entry shared by all.
  std::vector<ParamPrior> lengthscales{ParamPrior::log_normal(0.0, 1.0)};
  ParamPrior noise_var = ParamPrior::log_uniform(1e-8, 1.0);

  const ParamPrior& lengthscale(int t) const {
    return lengthscales.size() == 1 ? lengthscales[0] : lengthscales[t];
  }
};

struct SliceOptions {
  int burn_in = 100;
  int thin = 1;
  double width = 1.0;
  int max_steps_out = 20;
  // Sample on standardised targets and map back to data units.
  bool standardize = true;
  // Chain state (log-parameters, standardised units) to resume from.
  std::optional<Vector> init;
};

struct HyperPosterior {
  std::vector<KernelParams> samples;
  double prior_mean = 0.0;
  double output_scale = 1.0;
  // Final chain state, reusable as SliceOptions::init.
  Vector chain_state;
};

HyperPosterior slice_sample_hypers(const GPModel& model, const HyperPrior& prior, int n_samples,
                                   Rng& rng, const SliceOptions& options = {});

// f(x) = offset + scale * sum_i weights_i cos(frequencies_i . x + phases_i)
struct FunctionSample {
  Matrix frequencies;
  Vector phases;
  Vector weights;
  double scale = 0.0;
  double offset = 0.0;

  double operator()(const Vector& x) const;
  Vector evaluate(const Points& x) const;
  // Feature matrix including the scale, one row per input.
  Matrix features(const Points& x) const;
};

FunctionSample sample_prior_function(const KernelParams& params, int num_features, Rng& rng,
                                     double offset = 0.0);
FunctionSample sample_function(const GPModel& model, int num_features, Rng& rng);

// GP ensembles for every black-box (objectives first, then constraints)
// sharing one input set, each with its own hyper-parameter samples.
class SurrogateSet {
 public:
  SurrogateSet() = default;
  SurrogateSet(Points x, std::vector<Vector> y, int num_objectives,
               std::vector<HyperPosterior> hypers);

  int num_objectives() const { return num_objectives_; }
  int num_constraints() const { return static_cast<int>(y_.size()) - num_objectives_; }
  int num_blackboxes() const { return static_cast<int>(y_.size()); }
  int num_hyper() const { return static_cast<int>(models_.size()); }
  int dim() const;

  const Points& inputs() const { return x_; }
  const std::vector<Vector>& targets() const { return y_; }
  const std::vector<HyperPosterior>& hypers() const { return hypers_; }

  // Models of every black-box for hyper sample h.
  const std::vector<GPModel>& models(int h) const { return models_[h]; }

  // Appends one observation and refits all models with fixed hyper-parameters.
  SurrogateSet with_observation(const Vector& x, const Vector& values) const;

  // Hyper-averaged posterior means of every black-box at x.
  Vector mean_at(const Vector& x) const;

 private:
  void build();

  Points x_;
  std::vector<Vector> y_;
  int num_objectives_ = 0;
  std::vector<HyperPosterior> hypers_;
  std::vector<std::vector<GPModel>> models_;
};

struct SurrogateOptions {
  int num_hyper = 10;
  HyperPrior prior;
  SliceOptions slice;
  // Burn-in used when resuming from a previous chain.
  int warm_burn_in = 10;
};

SurrogateSet fit_surrogates(const Points& x, const std::vector<Vector>& y, int num_objectives,
                            const SurrogateOptions& options, Rng& rng,
                            const SurrogateSet* previous = nullptr);

}  // namespace ppesmoc

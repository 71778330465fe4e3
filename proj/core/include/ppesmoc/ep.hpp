#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ppesmoc/dual.hpp"
#include "ppesmoc/gp.hpp"
#include "ppesmoc/pareto.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

struct NatGauss1 {
  double nat_mean = 0.0;
  double nat_prec = 0.0;
};

struct NatGauss2 {
  Eigen::Vector2d nat_mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d nat_prec = Eigen::Matrix2d::Zero();
};

struct Moments1 {
  double mean = 0.0;
  double var = 1.0;
};

struct Moments2 {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

// Marginal divided by factor; empty when the result is not a proper Gaussian.
std::optional<Moments1> cavity_1d(const Moments1& marginal, const NatGauss1& factor);
std::optional<Moments2> cavity_2d(const Moments2& marginal, const NatGauss2& factor);

struct PhiLogZ {
  double logz = 0.0;
  double dlogz_dm = 0.0;
  double d2logz_dm2 = 0.0;
};

// Z = Phi(m / sqrt(v)).
PhiLogZ logz_phi(double mean, double var);

// Derivatives of log Z for the pair factor. For objective k the gradient with
// respect to the (pareto value, other value) mean is obj_grad[k] * (1, -1) and the
// Hessian is obj_hess[k] * [[1, -1], [-1, 1]].
struct OmegaLogZ {
  bool valid = false;
  double logz = 0.0;
  std::vector<double> alpha, rho, obj_grad, obj_hess;
  std::vector<double> beta, omega, con_grad, con_hess;
  // Difference moments (pareto minus other) seen by each objective term.
  std::vector<Moments1> obj_diff;
  std::vector<Moments1> con_cavity;
};

// Z = 1 - prod_j Phi(beta_j) prod_k Phi(alpha_k).
OmegaLogZ logz_omega(std::span<const Moments2> objective_cavities,
                     std::span<const Moments1> constraint_cavities);
OmegaLogZ logz_omega_diff(std::span<const Moments1> objective_diffs,
                          std::span<const Moments1> constraint_cavities);

// Moment-matched factor in natural form, damped: theta * new + (1 - theta) * old.
std::optional<NatGauss1> update_phi(const Moments1& cavity, const PhiLogZ& d, const NatGauss1& old,
                                    double damping);

struct OmegaFactors {
  std::vector<NatGauss2> objectives;
  std::vector<NatGauss1> constraints;
};

std::optional<OmegaFactors> update_omega(const OmegaLogZ& d, const OmegaFactors& old,
                                         double damping);

// Factor naturals from logZ derivatives of a univariate cavity (m, v).
template <class T>
void match_factor(const T& grad, const T& hess, const T& mean, const T& var, T& nat_prec,
                  T& nat_mean) {
  const T denom = 1.0 + hess * var;
  nat_prec = -hess / denom;
  nat_mean = (grad - hess * mean) / denom;
}

// Shared pair-factor computation. Inputs are difference cavities per objective
// and constraint cavities; writes factor precisions (objectives then
// constraints) and optionally natural means. Returns false when Z is degenerate.
template <class T>
bool omega_precisions(int num_obj, int num_con, const T* obj_mean, const T* obj_var,
                      const T* con_mean, const T* con_var, T* prec, T* nat_mean = nullptr) {
  constexpr int kMax = 64;
  if (num_obj + num_con > kMax) return false;
  T z[kMax];
  T log_sum = 0.0;
  for (int i = 0; i < num_obj + num_con; ++i) {
    const T& m = i < num_obj ? obj_mean[i] : con_mean[i - num_obj];
    const T& v = i < num_obj ? obj_var[i] : con_var[i - num_obj];
    z[i] = m / sqrt_s(v);
    log_sum = log_sum + log_cdf_s(z[i]);
  }
  if (!(value_of(log_sum) < 0.0)) return false;
  const T logz = log1mexp_s(log_sum);
  if (!(value_of(logz) > -700.0)) return false;
  const T ratio = exp_s(log_sum - logz);
  for (int i = 0; i < num_obj + num_con; ++i) {
    const T& m = i < num_obj ? obj_mean[i] : con_mean[i - num_obj];
    const T& v = i < num_obj ? obj_var[i] : con_var[i - num_obj];
    const T r = -ratio * mills_s(z[i]);
    const T grad = r / sqrt_s(v);
    const T hess = -r * (z[i] + r) / v;
    T nm;
    match_factor(grad, hess, m, v, prec[i], nm);
    if (!(value_of(1.0 + hess * v) > 0.0)) return false;
    if (nat_mean) nat_mean[i] = nm;
  }
  return true;
}

// Index of a pair factor: Pareto point `pareto` against point `other` of U.
struct OmegaPair {
  int pareto = 0;
  int other = 0;
};

// Approximate factors over U = Pareto points (first num_pareto) then the rest.
struct FactorStore {
  int num_pareto = 0;
  int num_points = 0;
  int num_objectives = 0;
  int num_constraints = 0;
  std::vector<NatGauss1> phi;        // [i * J + j]
  std::vector<OmegaPair> pairs;
  std::vector<NatGauss2> omega_obj;  // [p * K + k]
  std::vector<NatGauss1> omega_con;  // [p * J + j]

  bool is_pareto_pair(int p) const { return pairs[p].other < num_pareto; }
};

FactorStore make_factor_store(int num_pareto, int num_points, int num_objectives,
                              int num_constraints);

// Gaussian process predictive over U for every black-box, objectives first.
struct EPPriors {
  int num_objectives = 0;
  std::vector<Vector> mean;
  std::vector<Matrix> cov;

  int num_blackboxes() const { return static_cast<int>(mean.size()); }
  int num_points() const { return mean.empty() ? 0 : static_cast<int>(mean[0].size()); }
};

struct CPDState {
  std::vector<Vector> mean;  // per black-box, objectives first
  std::vector<Matrix> cov;
};

// Accumulated factor precision and natural mean over U for one black-box.
void factor_naturals(const FactorStore& factors, int blackbox, Matrix& lambda, Vector& eta);

// Empty when some accumulated covariance is not positive definite.
std::optional<CPDState> reconstruct_cpd(const EPPriors& priors, const FactorStore& factors);

struct EPOptions {
  int max_sweeps = 200;
  double tolerance = 1e-4;
  double initial_damping = 0.5;
  double damping_decay = 0.99;
  int max_halvings = 30;
  // JSON line per sweep with the factor parameters when set.
  std::ostream* debug = nullptr;
};

enum class EPStatus { Converged, MaxSweeps, Stalled };

struct EPResult {
  FactorStore factors;
  CPDState cpd;
  EPStatus status = EPStatus::Converged;
  int sweeps = 0;
  double damping = 0.0;
  double last_change = 0.0;
  int skipped_updates = 0;
};

EPResult run_ep(const EPPriors& priors, int num_pareto, const EPOptions& options = {});

// Union of Pareto points and observations not duplicating a Pareto point.
Points conditioning_points(const Points& pareto, const Points& observed);

// Priors over conditioning_points, each black-box divided by its output scale.
EPPriors make_priors(const std::vector<GPModel>& models, int num_objectives, const Points& points);

struct ConditionedState {
  Points points;  // U
  int num_pareto = 0;
  EPResult ep;
  EPPriors priors;
};

ConditionedState condition_on_pareto(const std::vector<GPModel>& models, int num_objectives,
                                     const ParetoSample& sample, const EPOptions& options = {});

}  // namespace ppesmoc

#include "ppesmoc/ep.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "ppesmoc/normal.hpp"

namespace ppesmoc {

std::optional<Moments1> cavity_1d(const Moments1& marginal, const NatGauss1& factor) {
  if (!(marginal.var > 0.0)) return std::nullopt;
  const double prec = 1.0 / marginal.var - factor.nat_prec;
  const double nat_mean = marginal.mean / marginal.var - factor.nat_mean;
  if (!(prec > 0.0) || !std::isfinite(prec) || !std::isfinite(nat_mean)) return std::nullopt;
  return Moments1{nat_mean / prec, 1.0 / prec};
}

std::optional<Moments2> cavity_2d(const Moments2& marginal, const NatGauss2& factor) {
  const Eigen::Matrix2d& c = marginal.cov;
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  if (!(c(0, 0) > 0.0) || !(det > 0.0)) return std::nullopt;
  const Eigen::Matrix2d marginal_prec = c.inverse();
  Eigen::Matrix2d prec = marginal_prec - factor.nat_prec;
  prec = 0.5 * (prec + prec.transpose()).eval();
  const double pdet = prec(0, 0) * prec(1, 1) - prec(0, 1) * prec(1, 0);
  if (!(prec(0, 0) > 0.0) || !(pdet > 0.0) || !prec.allFinite()) return std::nullopt;
  Moments2 out;
  out.cov = prec.inverse();
  out.mean = out.cov * (marginal_prec * marginal.mean - factor.nat_mean);
  return out;
}

PhiLogZ logz_phi(double mean, double var) {
  const double sd = std::sqrt(var);
  const double z = mean / sd;
  PhiLogZ out;
  out.logz = normal::log_cdf(z);
  const double lambda = normal::mills(z);
  out.dlogz_dm = lambda / sd;
  out.d2logz_dm2 = -lambda * (z + lambda) / var;
  return out;
}

OmegaLogZ logz_omega_diff(std::span<const Moments1> objective_diffs,
                          std::span<const Moments1> constraint_cavities) {
  OmegaLogZ out;
  const int k_count = static_cast<int>(objective_diffs.size());
  const int j_count = static_cast<int>(constraint_cavities.size());
  out.obj_diff.assign(objective_diffs.begin(), objective_diffs.end());
  out.con_cavity.assign(constraint_cavities.begin(), constraint_cavities.end());
  for (const auto& m : objective_diffs)
    if (!(m.var > 0.0)) return out;
  for (const auto& m : constraint_cavities)
    if (!(m.var > 0.0)) return out;

  double log_sum = 0.0;
  for (const auto& m : objective_diffs) {
    out.alpha.push_back(m.mean / std::sqrt(m.var));
    log_sum += normal::log_cdf(out.alpha.back());
  }
  for (const auto& m : constraint_cavities) {
    out.beta.push_back(m.mean / std::sqrt(m.var));
    log_sum += normal::log_cdf(out.beta.back());
  }
  if (!(log_sum < 0.0)) return out;
  out.logz = normal::log1mexp(log_sum);
  if (!std::isfinite(out.logz)) return out;
  const double ratio = std::exp(log_sum - out.logz);

  for (int k = 0; k < k_count; ++k) {
    const double a = out.alpha[k];
    const double r = -ratio * normal::mills(a);
    const double s = objective_diffs[k].var;
    out.rho.push_back(r);
    out.obj_grad.push_back(r / std::sqrt(s));
    out.obj_hess.push_back(-r * (a + r) / s);
  }
  for (int j = 0; j < j_count; ++j) {
    const double b = out.beta[j];
    const double w = -ratio * normal::mills(b);
    const double v = constraint_cavities[j].var;
    out.omega.push_back(w);
    out.con_grad.push_back(w / std::sqrt(v));
    out.con_hess.push_back(-w * (b + w) / v);
  }
  out.valid = true;
  return out;
}

OmegaLogZ logz_omega(std::span<const Moments2> objective_cavities,
                     std::span<const Moments1> constraint_cavities) {
  std::vector<Moments1> diffs;
  for (const auto& c : objective_cavities)
    diffs.push_back({c.mean[0] - c.mean[1], c.cov(0, 0) + c.cov(1, 1) - c.cov(0, 1) - c.cov(1, 0)});
  return logz_omega_diff(diffs, constraint_cavities);
}

std::optional<NatGauss1> update_phi(const Moments1& cavity, const PhiLogZ& d, const NatGauss1& old,
                                    double damping) {
  double prec = 0.0, nat_mean = 0.0;
  match_factor(d.dlogz_dm, d.d2logz_dm2, cavity.mean, cavity.var, prec, nat_mean);
  if (!std::isfinite(prec) || !std::isfinite(nat_mean) || !(1.0 + d.d2logz_dm2 * cavity.var > 0.0))
    return std::nullopt;
  return NatGauss1{damping * nat_mean + (1.0 - damping) * old.nat_mean,
                   damping * prec + (1.0 - damping) * old.nat_prec};
}

std::optional<OmegaFactors> update_omega(const OmegaLogZ& d, const OmegaFactors& old,
                                         double damping) {
  if (!d.valid) return std::nullopt;
  const Eigen::Vector2d e(1.0, -1.0);
  const Eigen::Matrix2d eet = e * e.transpose();
  OmegaFactors out;
  for (std::size_t k = 0; k < d.obj_grad.size(); ++k) {
    double prec = 0.0, nat_mean = 0.0;
    match_factor(d.obj_grad[k], d.obj_hess[k], d.obj_diff[k].mean, d.obj_diff[k].var, prec,
                 nat_mean);
    if (!std::isfinite(prec) || !std::isfinite(nat_mean) ||
        !(1.0 + d.obj_hess[k] * d.obj_diff[k].var > 0.0))
      return std::nullopt;
    NatGauss2 f;
    f.nat_prec = damping * prec * eet + (1.0 - damping) * old.objectives[k].nat_prec;
    f.nat_mean = damping * nat_mean * e + (1.0 - damping) * old.objectives[k].nat_mean;
    out.objectives.push_back(f);
  }
  for (std::size_t j = 0; j < d.con_grad.size(); ++j) {
    const Moments1& c = d.con_cavity[j];
    double prec = 0.0, nat_mean = 0.0;
    match_factor(d.con_grad[j], d.con_hess[j], c.mean, c.var, prec, nat_mean);
    if (!std::isfinite(prec) || !std::isfinite(nat_mean) || !(1.0 + d.con_hess[j] * c.var > 0.0))
      return std::nullopt;
    out.constraints.push_back({damping * nat_mean + (1.0 - damping) * old.constraints[j].nat_mean,
                               damping * prec + (1.0 - damping) * old.constraints[j].nat_prec});
  }
  return out;
}

FactorStore make_factor_store(int num_pareto, int num_points, int num_objectives,
                              int num_constraints) {
  FactorStore s;
  s.num_pareto = num_pareto;
  s.num_points = num_points;
  s.num_objectives = num_objectives;
  s.num_constraints = num_constraints;
  s.phi.assign(static_cast<std::size_t>(num_pareto) * num_constraints, {});
  for (int i = 0; i < num_pareto; ++i)
    for (int o = 0; o < num_points; ++o)
      if (o != i) s.pairs.push_back({i, o});
  s.omega_obj.assign(s.pairs.size() * num_objectives, {});
  s.omega_con.assign(s.pairs.size() * num_constraints, {});
  return s;
}

namespace {

bool positive_definite(const Matrix& v) {
  const int n = static_cast<int>(v.rows());
  if (n == 0) return true;
  if (!v.allFinite()) return false;
  for (int i = 0; i < n; ++i)
    if (!(v(i, i) > 0.0)) return false;
  Matrix work = v;
  work.diagonal().array() += 1e-12 * v.diagonal().maxCoeff();
  Eigen::LLT<Matrix> llt(work);
  return llt.info() == Eigen::Success;
}

}  // namespace

void factor_naturals(const FactorStore& f, int b, Matrix& lambda, Vector& eta) {
  const int n = f.num_points;
  const int k_count = f.num_objectives;
  const int j_count = f.num_constraints;
  lambda.setZero(n, n);
  eta.setZero(n);
  const int p_count = static_cast<int>(f.pairs.size());
  if (b < k_count) {
    for (int p = 0; p < p_count; ++p) {
      const auto [i, o] = f.pairs[p];
      const NatGauss2& g = f.omega_obj[p * k_count + b];
      lambda(i, i) += g.nat_prec(0, 0);
      lambda(i, o) += g.nat_prec(0, 1);
      lambda(o, i) += g.nat_prec(1, 0);
      lambda(o, o) += g.nat_prec(1, 1);
      eta[i] += g.nat_mean[0];
      eta[o] += g.nat_mean[1];
    }
  } else {
    const int j = b - k_count;
    for (int i = 0; i < f.num_pareto; ++i) {
      const NatGauss1& g = f.phi[i * j_count + j];
      lambda(i, i) += g.nat_prec;
      eta[i] += g.nat_mean;
    }
    for (int p = 0; p < p_count; ++p) {
      const NatGauss1& g = f.omega_con[p * j_count + j];
      const int o = f.pairs[p].other;
      lambda(o, o) += g.nat_prec;
      eta[o] += g.nat_mean;
    }
  }
}

std::optional<CPDState> reconstruct_cpd(const EPPriors& priors, const FactorStore& factors) {
  const int n = priors.num_points();
  CPDState out;
  Matrix lambda;
  Vector eta;
  for (int b = 0; b < priors.num_blackboxes(); ++b) {
    const Matrix& sigma = priors.cov[b];
    factor_naturals(factors, b, lambda, eta);
    Matrix t = Matrix::Identity(n, n);
    t.noalias() += sigma * lambda;
    Matrix rhs(n, n + 1);
    rhs.leftCols(n) = sigma;
    rhs.col(n) = priors.mean[b] + sigma * eta;
    Eigen::PartialPivLU<Matrix> lu(t);
    const Matrix sol = lu.solve(rhs);
    Matrix v = 0.5 * (sol.leftCols(n) + sol.leftCols(n).transpose());
    if (!positive_definite(v)) return std::nullopt;
    out.mean.push_back(sol.col(n));
    out.cov.push_back(std::move(v));
  }
  return out;
}

namespace {

struct SweepResult {
  FactorStore next;
  double max_change = 0.0;
  int skipped = 0;
};

void track(double& max_change, double a, double b) {
  max_change = std::max(max_change, std::abs(a - b));
}

SweepResult sweep(const CPDState& cpd, const FactorStore& cur, double damping) {
  SweepResult r{cur, 0.0, 0};
  const int k_count = cur.num_objectives;
  const int j_count = cur.num_constraints;

  for (int i = 0; i < cur.num_pareto; ++i) {
    for (int j = 0; j < j_count; ++j) {
      const int b = k_count + j;
      const NatGauss1& old = cur.phi[i * j_count + j];
      const auto cav = cavity_1d({cpd.mean[b][i], cpd.cov[b](i, i)}, old);
      if (!cav) {
        ++r.skipped;
        continue;
      }
      const auto upd = update_phi(*cav, logz_phi(cav->mean, cav->var), old, damping);
      if (!upd) {
        ++r.skipped;
        continue;
      }
      r.next.phi[i * j_count + j] = *upd;
      track(r.max_change, upd->nat_mean, old.nat_mean);
      track(r.max_change, upd->nat_prec, old.nat_prec);
    }
  }

  std::vector<Moments1> diffs(k_count), cons(j_count);
  OmegaFactors old;
  old.objectives.resize(k_count);
  old.constraints.resize(j_count);
  for (std::size_t p = 0; p < cur.pairs.size(); ++p) {
    const auto [i, o] = cur.pairs[p];
    bool usable = true;
    for (int k = 0; k < k_count && usable; ++k) {
      const Matrix& v = cpd.cov[k];
      const NatGauss2& f = cur.omega_obj[p * k_count + k];
      old.objectives[k] = f;
      const Moments1 marginal{cpd.mean[k][i] - cpd.mean[k][o], v(i, i) + v(o, o) - 2.0 * v(i, o)};
      // Stored objective factors are rank one along (1, -1).
      const auto cav = cavity_1d(marginal, {f.nat_mean[0], f.nat_prec(0, 0)});
      if (!cav) usable = false;
      else diffs[k] = *cav;
    }
    for (int j = 0; j < j_count && usable; ++j) {
      const int b = k_count + j;
      const NatGauss1& f = cur.omega_con[p * j_count + j];
      old.constraints[j] = f;
      const auto cav = cavity_1d({cpd.mean[b][o], cpd.cov[b](o, o)}, f);
      if (!cav) usable = false;
      else cons[j] = *cav;
    }
    if (!usable) {
      ++r.skipped;
      continue;
    }
    const auto upd = update_omega(logz_omega_diff(diffs, cons), old, damping);
    if (!upd) {
      ++r.skipped;
      continue;
    }
    for (int k = 0; k < k_count; ++k) {
      const NatGauss2& a = upd->objectives[k];
      const NatGauss2& b = old.objectives[k];
      track(r.max_change, a.nat_prec(0, 0), b.nat_prec(0, 0));
      track(r.max_change, a.nat_mean[0], b.nat_mean[0]);
      r.next.omega_obj[p * k_count + k] = a;
    }
    for (int j = 0; j < j_count; ++j) {
      const NatGauss1& a = upd->constraints[j];
      const NatGauss1& b = old.constraints[j];
      track(r.max_change, a.nat_prec, b.nat_prec);
      track(r.max_change, a.nat_mean, b.nat_mean);
      r.next.omega_con[p * j_count + j] = a;
    }
  }
  return r;
}

void dump(std::ostream& os, int sweep_index, double damping, double change,
          const FactorStore& f) {
  nlohmann::json line;
  line["sweep"] = sweep_index;
  line["damping"] = damping;
  line["max_change"] = change;
  auto& phi = line["phi"] = nlohmann::json::array();
  for (const auto& g : f.phi) phi.push_back({g.nat_mean, g.nat_prec});
  auto& obj = line["omega_obj"] = nlohmann::json::array();
  for (const auto& g : f.omega_obj) obj.push_back({g.nat_mean[0], g.nat_prec(0, 0)});
  auto& con = line["omega_con"] = nlohmann::json::array();
  for (const auto& g : f.omega_con) con.push_back({g.nat_mean, g.nat_prec});
  os << line.dump() << '\n';
}

}  // namespace

EPResult run_ep(const EPPriors& priors, int num_pareto, const EPOptions& options) {
  if (num_pareto < 1) throw std::invalid_argument("run_ep: empty Pareto set");
  EPResult res;
  res.factors = make_factor_store(num_pareto, priors.num_points(), priors.num_objectives,
                                  priors.num_blackboxes() - priors.num_objectives);
  auto initial = reconstruct_cpd(priors, res.factors);
  if (!initial) throw ModelError("run_ep: prior covariance not positive definite");
  res.cpd = std::move(*initial);
  res.damping = options.initial_damping;
  res.status = options.max_sweeps > 0 ? EPStatus::MaxSweeps : EPStatus::Converged;

  for (int s = 0; s < options.max_sweeps; ++s) {
    bool accepted = false;
    SweepResult step;
    std::optional<CPDState> cpd;
    for (int h = 0; h <= options.max_halvings; ++h) {
      step = sweep(res.cpd, res.factors, res.damping);
      cpd = reconstruct_cpd(priors, step.next);
      if (cpd) {
        accepted = true;
        break;
      }
      res.damping *= 0.5;
    }
    res.sweeps = s + 1;
    if (!accepted) {
      res.status = EPStatus::Stalled;
      break;
    }
    res.factors = std::move(step.next);
    res.cpd = std::move(*cpd);
    res.last_change = step.max_change;
    res.skipped_updates = step.skipped;
    if (options.debug) dump(*options.debug, s, res.damping, step.max_change, res.factors);
    res.damping *= options.damping_decay;
    if (step.max_change < options.tolerance) {
      res.status = EPStatus::Converged;
      break;
    }
  }
  return res;
}

Points conditioning_points(const Points& pareto, const Points& observed) {
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < observed.rows(); ++i) {
    bool duplicate = false;
    for (Eigen::Index p = 0; p < pareto.rows() && !duplicate; ++p)
      duplicate = (observed.row(i) - pareto.row(p)).squaredNorm() < 1e-24;
    if (!duplicate) keep.push_back(static_cast<int>(i));
  }
  Points u(pareto.rows() + static_cast<Eigen::Index>(keep.size()), pareto.cols());
  u.topRows(pareto.rows()) = pareto;
  for (std::size_t i = 0; i < keep.size(); ++i) u.row(pareto.rows() + i) = observed.row(keep[i]);
  return u;
}

EPPriors make_priors(const std::vector<GPModel>& models, int num_objectives, const Points& points) {
  EPPriors pr;
  pr.num_objectives = num_objectives;
  for (const auto& m : models) {
    Prediction p = m.predict(points);
    const double s = m.output_scale();
    pr.mean.push_back(p.mean / s);
    Matrix cov = p.cov / (s * s);
    cov.diagonal().array() += 1e-10 * m.params().amplitude2 / (s * s);
    pr.cov.push_back(std::move(cov));
  }
  return pr;
}

ConditionedState condition_on_pareto(const std::vector<GPModel>& models, int num_objectives,
                                     const ParetoSample& sample, const EPOptions& options) {
  ConditionedState st;
  st.num_pareto = sample.size();
  st.points = conditioning_points(sample.points, models[0].inputs());
  st.priors = make_priors(models, num_objectives, st.points);
  st.ep = run_ep(st.priors, st.num_pareto, options);
  return st;
}

}  // namespace ppesmoc

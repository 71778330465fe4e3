#include "ppesmoc/batch.hpp"

#include <algorithm>
#include <cmath>

namespace ppesmoc {

struct BatchConditioner::Forward {
  Matrix k_ub, k_ob, k_bb;
  Matrix sigma_ub, a_ob, sigma_bb, h, v_bb, r;
  Vector mu_b, mean_b;
};

namespace {

constexpr int kMaxHalvings = 30;

// Factor precisions for one (batch point, Pareto point) pair and, optionally,
// their Jacobian with respect to the packed cavity inputs
// [obj means (K), obj vars (K), con means (J), con vars (J)].
template <int N>
bool pair_jacobian(int k_count, int j_count, const double* in, double* prec, double* jac) {
  using D = Dual<N>;
  const int n = 2 * (k_count + j_count);
  D v[N];
  for (int i = 0; i < n; ++i) v[i] = D::variable(in[i], i);
  D out[N / 2];
  const bool ok = omega_precisions<D>(k_count, j_count, v, v + k_count, v + 2 * k_count,
                                      v + 2 * k_count + j_count, out);
  if (!ok) return false;
  for (int o = 0; o < k_count + j_count; ++o) {
    prec[o] = out[o].v;
    for (int i = 0; i < n; ++i) jac[o * n + i] = out[o].d[i];
  }
  return true;
}

bool pair_with_jacobian(int k_count, int j_count, const double* in, double* prec, double* jac) {
  const int n = 2 * (k_count + j_count);
  if (n <= 4) return pair_jacobian<4>(k_count, j_count, in, prec, jac);
  if (n <= 8) return pair_jacobian<8>(k_count, j_count, in, prec, jac);
  if (n <= 16) return pair_jacobian<16>(k_count, j_count, in, prec, jac);
  if (n <= 32) return pair_jacobian<32>(k_count, j_count, in, prec, jac);
  throw std::invalid_argument("BatchConditioner: too many black-boxes for gradient");
}

bool logdet_pd(const Matrix& a, double& logdet) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  if (!(diag.array() > 0.0).all() || !diag.allFinite()) return false;
  logdet = 2.0 * diag.array().log().sum();
  return true;
}

Matrix spd_inverse(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

Points separate_duplicates(const Points& x) {
  Points out = x;
  for (Eigen::Index b = 1; b < out.rows(); ++b)
    for (Eigen::Index c = 0; c < b; ++c)
      if ((out.row(b) - out.row(c)).norm() < 1e-6) {
        out(b, 0) += out(b, 0) > 0.5 ? -1e-6 : 1e-6;
      }
  return out;
}

}  // namespace

BatchConditioner::BatchConditioner(const std::vector<GPModel>& models, int num_objectives,
                                   const ConditionedState& state)
    : num_objectives_(num_objectives), num_pareto_(state.num_pareto), points_(state.points) {
  const int n = static_cast<int>(points_.rows());
  Matrix lambda;
  Vector eta;
  for (int g = 0; g < static_cast<int>(models.size()); ++g) {
    const GPModel& m = models[g];
    Block blk;
    blk.scale = m.output_scale();
    const double s2 = blk.scale * blk.scale;
    blk.params = m.params();
    blk.params.amplitude2 /= s2;
    blk.params.noise_var /= s2;
    blk.noise = blk.params.noise_var + 1e-10 * blk.params.amplitude2;
    blk.prior_mean = m.prior_mean() / blk.scale;
    blk.observed = m.inputs();
    const int n_obs = m.size();
    if (n_obs > 0) {
      blk.kinv = s2 * m.solve(Matrix::Identity(n_obs, n_obs));
      blk.kinv = 0.5 * (blk.kinv + blk.kinv.transpose()).eval();
      blk.weights = blk.scale * m.weights();
      blk.cross = kernel_matrix(points_, blk.observed, blk.params) * blk.kinv;
    } else {
      blk.kinv.resize(0, 0);
      blk.weights.resize(0);
      blk.cross.resize(n, 0);
    }

    const Matrix& sigma = state.priors.cov[g];
    factor_naturals(state.ep.factors, g, lambda, eta);
    Matrix t = Matrix::Identity(n, n);
    t.noalias() += sigma * lambda;
    Eigen::PartialPivLU<Matrix> lu(t);
    const Matrix t_inv = lu.inverse();
    blk.gain = lambda * t_inv;
    blk.gain = 0.5 * (blk.gain + blk.gain.transpose()).eval();
    blk.shift = eta - blk.gain * (state.priors.mean[g] + sigma * eta);
    blk.proj = t_inv.topRows(num_pareto_);
    blk.cpd_mean = state.ep.cpd.mean[g];
    blk.cpd_cov_pareto = state.ep.cpd.cov[g].topLeftCorner(num_pareto_, num_pareto_);
    blocks_.push_back(std::move(blk));
  }
}

void BatchConditioner::forward(const Points& x, std::vector<Forward>& fw) const {
  fw.resize(blocks_.size());
  for (std::size_t g = 0; g < blocks_.size(); ++g) {
    const Block& blk = blocks_[g];
    Forward& f = fw[g];
    f.k_ub = kernel_matrix(points_, x, blk.params);
    f.k_bb = kernel_matrix(x, x, blk.params);
    f.sigma_ub = f.k_ub;
    f.sigma_bb = f.k_bb;
    f.mu_b = Vector::Constant(x.rows(), blk.prior_mean);
    if (blk.observed.rows() > 0) {
      f.k_ob = kernel_matrix(blk.observed, x, blk.params);
      f.sigma_ub.noalias() -= blk.cross * f.k_ob;
      f.a_ob = blk.kinv * f.k_ob;
      f.sigma_bb.noalias() -= f.k_ob.transpose() * f.a_ob;
      f.mu_b.noalias() += f.k_ob.transpose() * blk.weights;
    }
    f.h = blk.gain * f.sigma_ub;
    f.v_bb = f.sigma_bb;
    f.v_bb.noalias() -= f.sigma_ub.transpose() * f.h;
    f.v_bb = 0.5 * (f.v_bb + f.v_bb.transpose()).eval();
    f.sigma_bb = 0.5 * (f.sigma_bb + f.sigma_bb.transpose()).eval();
    f.mean_b = f.mu_b;
    f.mean_b.noalias() += f.sigma_ub.transpose() * blk.shift;
    if (static_cast<int>(g) < num_objectives_) f.r = blk.proj * f.sigma_ub;
  }
}

namespace {

// Per-block reconstruction with the batch factors.
struct Recon {
  Matrix v_s;  // joint covariance over (Pareto, batch) or batch only
  Matrix z;    // (I + V_S Lambda_S)^{-1}
  Matrix f;    // conditioned joint covariance
  Matrix v_new;
};

}  // namespace

BatchReduction BatchConditioner::evaluate(const Points& x_in, bool with_gradient,
                                          BatchCovariances* covs) const {
  const Points x = separate_duplicates(x_in);
  const int nb = static_cast<int>(x.rows());
  const int m_count = num_pareto_;
  const int k_count = num_objectives_;
  const int g_count = num_blackboxes();
  const int j_count = g_count - k_count;
  const int n_in = 2 * g_count;

  std::vector<Forward> fw;
  forward(x, fw);

  // Pair factor precisions [(b * M + m) * G + g] and Jacobians.
  const int pairs = nb * m_count;
  std::vector<double> prec(static_cast<std::size_t>(pairs) * g_count, 0.0);
  std::vector<double> jac;
  if (with_gradient) jac.assign(static_cast<std::size_t>(pairs) * g_count * n_in, 0.0);
  std::vector<char> valid(pairs, 0);
  std::vector<double> in(n_in);
  for (int b = 0; b < nb; ++b) {
    for (int m = 0; m < m_count; ++m) {
      for (int k = 0; k < k_count; ++k) {
        const Block& blk = blocks_[k];
        in[k] = blk.cpd_mean[m] - fw[k].mean_b[b];
        in[k_count + k] =
            blk.cpd_cov_pareto(m, m) + fw[k].v_bb(b, b) - 2.0 * fw[k].r(m, b);
      }
      for (int j = 0; j < j_count; ++j) {
        in[2 * k_count + j] = fw[k_count + j].mean_b[b];
        in[2 * k_count + j_count + j] = fw[k_count + j].v_bb(b, b);
      }
      bool cavity_ok = true;
      for (int g = 0; g < g_count; ++g) {
        const double v = g < k_count ? in[k_count + g] : in[2 * k_count + j_count + (g - k_count)];
        if (!(v > 0.0)) cavity_ok = false;
      }
      if (!cavity_ok) continue;
      const int p = b * m_count + m;
      double* pp = &prec[static_cast<std::size_t>(p) * g_count];
      bool ok;
      if (with_gradient)
        ok = pair_with_jacobian(k_count, j_count, in.data(), pp,
                                &jac[static_cast<std::size_t>(p) * g_count * n_in]);
      else
        ok = omega_precisions<double>(k_count, j_count, in.data(), in.data() + k_count,
                                      in.data() + 2 * k_count,
                                      in.data() + 2 * k_count + j_count, pp);
      if (!ok || !std::all_of(pp, pp + g_count, [](double v) { return std::isfinite(v); })) {
        std::fill(pp, pp + g_count, 0.0);
        continue;
      }
      valid[p] = 1;
    }
  }

  std::vector<Recon> rec(g_count);
  std::vector<double> logdet_new(g_count), logdet_old(g_count);
  for (int g = 0; g < g_count; ++g) {
    Matrix a = fw[g].sigma_bb;
    a.diagonal().array() += blocks_[g].noise;
    if (!logdet_pd(a, logdet_old[g]))
      throw ModelError("BatchConditioner: predictive covariance not positive definite");
  }

  auto reconstruct = [&](double theta) {
    for (int g = 0; g < g_count; ++g) {
      Recon& r = rec[g];
      if (g < k_count) {
        const int s = m_count + nb;
        r.v_s.resize(s, s);
        r.v_s.topLeftCorner(m_count, m_count) = blocks_[g].cpd_cov_pareto;
        r.v_s.topRightCorner(m_count, nb) = fw[g].r;
        r.v_s.bottomLeftCorner(nb, m_count) = fw[g].r.transpose();
        r.v_s.bottomRightCorner(nb, nb) = fw[g].v_bb;
        Matrix lam = Matrix::Zero(s, s);
        for (int b = 0; b < nb; ++b)
          for (int m = 0; m < m_count; ++m) {
            const double a = theta * prec[static_cast<std::size_t>(b * m_count + m) * g_count + g];
            const int q = m_count + b;
            lam(m, m) += a;
            lam(q, q) += a;
            lam(m, q) -= a;
            lam(q, m) -= a;
          }
        Matrix t = Matrix::Identity(s, s);
        t.noalias() += r.v_s * lam;
        r.z = Eigen::PartialPivLU<Matrix>(t).inverse();
        r.f = r.z * r.v_s;
        r.v_new = r.f.bottomRightCorner(nb, nb);
      } else {
        r.v_s = fw[g].v_bb;
        Vector dvec = Vector::Zero(nb);
        for (int b = 0; b < nb; ++b)
          for (int m = 0; m < m_count; ++m)
            dvec[b] += theta * prec[static_cast<std::size_t>(b * m_count + m) * g_count + g];
        Matrix t = Matrix::Identity(nb, nb);
        t.noalias() += r.v_s * dvec.asDiagonal();
        r.z = Eigen::PartialPivLU<Matrix>(t).inverse();
        r.f = r.z * r.v_s;
        r.v_new = r.f;
      }
      r.v_new = 0.5 * (r.v_new + r.v_new.transpose()).eval();
      Matrix a = r.v_new;
      a.diagonal().array() += blocks_[g].noise;
      if (!logdet_pd(a, logdet_new[g])) return false;
    }
    return true;
  };

  double theta = 1.0;
  bool ok = reconstruct(theta);
  for (int h = 0; h < kMaxHalvings && !ok; ++h) {
    theta *= 0.5;
    ok = reconstruct(theta);
  }
  if (!ok) {
    theta = 0.0;
    if (!reconstruct(theta))
      throw ModelError("BatchConditioner: conditioned covariance not positive definite");
  }

  BatchReduction out;
  out.damping = theta;
  out.per_blackbox.resize(g_count);
  for (int g = 0; g < g_count; ++g) out.per_blackbox[g] = logdet_old[g] - logdet_new[g];
  if (covs) {
    for (int g = 0; g < g_count; ++g) {
      const double s2 = blocks_[g].scale * blocks_[g].scale;
      Matrix pred = fw[g].sigma_bb;
      pred.diagonal().array() += blocks_[g].params.noise_var;
      Matrix cond = rec[g].v_new;
      cond.diagonal().array() += blocks_[g].params.noise_var;
      covs->predictive.push_back(s2 * pred);
      covs->conditioned.push_back(s2 * cond);
    }
  }
  if (!with_gradient) return out;

  // Reverse pass.
  std::vector<Matrix> bar_vbb(g_count), bar_sbb(g_count), bar_r(g_count);
  std::vector<Vector> bar_mean(g_count);
  std::vector<double> bar_prec(static_cast<std::size_t>(pairs) * g_count, 0.0);
  for (int g = 0; g < g_count; ++g) {
    const Recon& r = rec[g];
    Matrix a_old = fw[g].sigma_bb;
    a_old.diagonal().array() += blocks_[g].noise;
    Matrix a_new = r.v_new;
    a_new.diagonal().array() += blocks_[g].noise;
    const Matrix psi_old = spd_inverse(a_old);
    const Matrix psi_new = spd_inverse(a_new);
    bar_sbb[g] = psi_old;
    bar_mean[g] = Vector::Zero(nb);
    if (g < k_count) {
      const Matrix zb = r.z.bottomRows(nb);
      const Matrix bar_vs = -zb.transpose() * psi_new * zb;
      const Matrix bar_lam = r.f.bottomRows(nb).transpose() * psi_new * r.f.rightCols(nb).transpose();
      bar_vbb[g] = bar_vs.bottomRightCorner(nb, nb);
      bar_r[g] = bar_vs.topRightCorner(m_count, nb) + bar_vs.bottomLeftCorner(nb, m_count).transpose();
      for (int b = 0; b < nb; ++b)
        for (int m = 0; m < m_count; ++m) {
          const int q = m_count + b;
          bar_prec[static_cast<std::size_t>(b * m_count + m) * g_count + g] =
              theta * (bar_lam(m, m) + bar_lam(q, q) - bar_lam(m, q) - bar_lam(q, m));
        }
    } else {
      bar_vbb[g] = -r.z.transpose() * psi_new * r.z;
      const Matrix bar_d = r.f.transpose() * psi_new * r.f.transpose();
      for (int b = 0; b < nb; ++b)
        for (int m = 0; m < m_count; ++m)
          bar_prec[static_cast<std::size_t>(b * m_count + m) * g_count + g] = theta * bar_d(b, b);
    }
  }

  for (int b = 0; b < nb; ++b) {
    for (int m = 0; m < m_count; ++m) {
      const int p = b * m_count + m;
      if (!valid[p]) continue;
      const double* jp = &jac[static_cast<std::size_t>(p) * g_count * n_in];
      const double* ap = &bar_prec[static_cast<std::size_t>(p) * g_count];
      for (int i = 0; i < n_in; ++i) {
        double bar_in = 0.0;
        for (int o = 0; o < g_count; ++o) bar_in += ap[o] * jp[o * n_in + i];
        if (bar_in == 0.0) continue;
        if (i < k_count) {
          bar_mean[i][b] -= bar_in;
        } else if (i < 2 * k_count) {
          const int k = i - k_count;
          bar_vbb[k](b, b) += bar_in;
          bar_r[k](m, b) -= 2.0 * bar_in;
        } else if (i < 2 * k_count + j_count) {
          bar_mean[k_count + (i - 2 * k_count)][b] += bar_in;
        } else {
          const int g = k_count + (i - 2 * k_count - j_count);
          bar_vbb[g](b, b) += bar_in;
        }
      }
    }
  }

  out.gradient = Matrix::Zero(nb, x.cols());
  for (int g = 0; g < g_count; ++g) {
    const Block& blk = blocks_[g];
    const Forward& f = fw[g];
    const Matrix sym_vbb = bar_vbb[g] + bar_vbb[g].transpose();
    Matrix bar_sub = -f.h * sym_vbb;
    bar_sub.noalias() += blk.shift * bar_mean[g].transpose();
    if (g < k_count) bar_sub.noalias() += blk.proj.transpose() * bar_r[g];
    const Matrix bar_kbb = bar_sbb[g] + bar_vbb[g];
    const Vector& bar_mu = bar_mean[g];

    for (int b = 0; b < nb; ++b) {
      const Vector xb = x.row(b).transpose();
      for (Eigen::Index u = 0; u < points_.rows(); ++u) {
        const double c = bar_sub(u, b);
        if (c != 0.0) out.gradient.row(b) += c * kernel_matern52_grad(xb, points_.row(u).transpose(), blk.params).transpose();
      }
      for (int c2 = 0; c2 < nb; ++c2) {
        if (c2 == b) continue;
        const double c = bar_kbb(b, c2) + bar_kbb(c2, b);
        out.gradient.row(b) += c * kernel_matern52_grad(xb, x.row(c2).transpose(), blk.params).transpose();
      }
    }
    if (blk.observed.rows() > 0) {
      Matrix bar_kob = -blk.cross.transpose() * bar_sub;
      bar_kob.noalias() -= f.a_ob * (bar_kbb + bar_kbb.transpose());
      bar_kob.noalias() += blk.weights * bar_mu.transpose();
      for (int b = 0; b < nb; ++b) {
        const Vector xb = x.row(b).transpose();
        for (Eigen::Index o = 0; o < blk.observed.rows(); ++o) {
          const double c = bar_kob(o, b);
          if (c != 0.0) out.gradient.row(b) += c * kernel_matern52_grad(xb, blk.observed.row(o).transpose(), blk.params).transpose();
        }
      }
    }
  }
  return out;
}

BatchReduction BatchConditioner::reduction(const Points& x, bool with_gradient) const {
  return evaluate(x, with_gradient, nullptr);
}

BatchCovariances BatchConditioner::covariances(const Points& x) const {
  BatchCovariances out;
  evaluate(x, false, &out);
  return out;
}

BatchCovariances cpd_at_batch(const BatchConditioner& conditioner, const Points& x) {
  return conditioner.covariances(x);
}

}  // namespace ppesmoc

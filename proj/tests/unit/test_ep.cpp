#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ppesmoc/ep.hpp"

using namespace ppesmoc;

namespace {

bool near_rel(double a, double b, double rel, double abs = 1e-9) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

Moments2 random_bivariate(Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), s(0.3, 1.5), c(-0.8, 0.8);
  Moments2 m;
  m.mean << u(rng), u(rng);
  const double a = s(rng), b = s(rng), r = c(rng);
  m.cov << a * a, r * a * b, r * a * b, b * b;
  return m;
}

Moments1 random_univariate(Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), v(0.2, 2.0);
  return {u(rng), v(rng)};
}

// Tilted moments implied by a 1-D cavity times a factor.
Moments1 tilted(const Moments1& cav, double nat_prec, double nat_mean) {
  const double prec = 1.0 / cav.var + nat_prec;
  return {(cav.mean / cav.var + nat_mean) / prec, 1.0 / prec};
}

Moments2 tilted(const Moments2& cav, const NatGauss2& f) {
  const Eigen::Matrix2d p = cav.cov.inverse();
  Moments2 out;
  out.cov = (p + f.nat_prec).inverse();
  out.mean = out.cov * (p * cav.mean + f.nat_mean);
  return out;
}

EPPriors random_priors(int n, int k, int j, Rng& rng) {
  EPPriors pr;
  pr.num_objectives = k;
  std::normal_distribution<double> n01;
  for (int b = 0; b < k + j; ++b) {
    Matrix a(n, n);
    for (auto& e : a.reshaped()) e = n01(rng);
    pr.cov.push_back(a * a.transpose() / n + 0.2 * Matrix::Identity(n, n));
    Vector m(n);
    for (auto& e : m) e = n01(rng);
    pr.mean.push_back(m);
  }
  return pr;
}

EPPriors gp_priors(const Points& u, int k, int j, double ls) {
  EPPriors pr;
  pr.num_objectives = k;
  const KernelParams p{1.0, Vector::Constant(u.cols(), ls), 0.0};
  for (int b = 0; b < k + j; ++b) {
    Matrix c = kernel_matrix(u, u, p);
    c.diagonal().array() += 1e-6;
    pr.cov.push_back(c);
    pr.mean.push_back(Vector::Constant(u.rows(), b < k ? 0.0 : 0.5));
  }
  return pr;
}

void fill_random(FactorStore& s, Rng& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3), p(0.0, 0.4);
  const Eigen::Vector2d e(1.0, -1.0);
  for (auto& g : s.phi) g = {u(rng), p(rng)};
  for (auto& g : s.omega_con) g = {u(rng), p(rng)};
  for (auto& g : s.omega_obj) {
    g.nat_prec = p(rng) * e * e.transpose();
    g.nat_mean = u(rng) * e;
  }
}

}  // namespace

TEST(Cavity1d, ZeroFactorIsMarginal) {
  const auto c = cavity_1d({0.7, 1.3}, {});
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->mean, 0.7);
  EXPECT_DOUBLE_EQ(c->var, 1.3);
}

TEST(Cavity1d, DegenerateFactorRejected) {
  EXPECT_FALSE(cavity_1d({1.0, 2.0}, {0.5, 0.5}));
  EXPECT_FALSE(cavity_1d({1.0, 2.0}, {0.0, 1.0}));
}

TEST(Cavity1d, MatchesGaussianRatio) {
  // N(1, 2) / N(1, 10): variance 1 / (1/2 - 1/10), mean v (1/2 - 1/10).
  const auto c = cavity_1d({1.0, 2.0}, {0.1, 0.1});
  ASSERT_TRUE(c);
  const double v = 1.0 / (1.0 / 2.0 - 1.0 / 10.0);
  EXPECT_NEAR(c->var, v, 1e-14);
  EXPECT_NEAR(c->mean, v * (1.0 / 2.0 - 1.0 / 10.0), 1e-14);
}

TEST(Cavity2d, ZeroFactorIsMarginal) {
  Rng rng(1);
  const Moments2 m = random_bivariate(rng);
  const auto c = cavity_2d(m, {});
  ASSERT_TRUE(c);
  EXPECT_LT((c->mean - m.mean).norm(), 1e-12);
  EXPECT_LT((c->cov - m.cov).norm(), 1e-12);
}

TEST(Cavity2d, DiagonalDecouples) {
  Moments2 m;
  m.mean << 0.3, -1.2;
  m.cov << 1.5, 0.0, 0.0, 0.6;
  NatGauss2 f;
  f.nat_mean << 0.2, -0.4;
  f.nat_prec << 0.3, 0.0, 0.0, 0.5;
  const auto c = cavity_2d(m, f);
  ASSERT_TRUE(c);
  for (int i = 0; i < 2; ++i) {
    const auto c1 = cavity_1d({m.mean[i], m.cov(i, i)}, {f.nat_mean[i], f.nat_prec(i, i)});
    ASSERT_TRUE(c1);
    EXPECT_NEAR(c->mean[i], c1->mean, 1e-12);
    EXPECT_NEAR(c->cov(i, i), c1->var, 1e-12);
  }
  EXPECT_NEAR(c->cov(0, 1), 0.0, 1e-15);
}

TEST(Cavity2d, MatchesDirectInversion) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 50; ++t) {
    const Moments2 m = random_bivariate(rng);
    NatGauss2 f;
    f.nat_mean << u(rng), u(rng);
    const double off = 0.1 * u(rng);
    f.nat_prec << 0.1 * std::abs(u(rng)), off, off, 0.1 * std::abs(u(rng));
    const auto c = cavity_2d(m, f);
    if (!c) continue;
    // Closed-form 2x2 inverses.
    auto inv = [](const Eigen::Matrix2d& a) {
      const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
      Eigen::Matrix2d r;
      r << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
      return Eigen::Matrix2d(r / det);
    };
    const Eigen::Matrix2d prec = inv(m.cov) - f.nat_prec;
    const Eigen::Matrix2d cov = inv(prec);
    const Eigen::Vector2d mean = cov * (inv(m.cov) * m.mean - f.nat_mean);
    EXPECT_LT((c->cov - cov).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((c->mean - mean).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Cavity2d, IndefiniteRejected) {
  Moments2 m;
  m.cov << 1.0, 0.0, 0.0, 1.0;
  NatGauss2 f;
  f.nat_prec << 2.0, 0.0, 0.0, 0.0;
  EXPECT_FALSE(cavity_2d(m, f));
}

TEST(LogZPhi, StandardValues) {
  const PhiLogZ d = logz_phi(0.0, 1.0);
  EXPECT_NEAR(d.logz, -std::log(2.0), 1e-15);
  EXPECT_NEAR(d.dlogz_dm, 0.79788, 1e-5);
  EXPECT_NEAR(d.dlogz_dm, 2.0 / std::sqrt(2.0 * M_PI), 1e-14);
}

TEST(LogZPhi, SaturatedConstraint) {
  const PhiLogZ d = logz_phi(10.0, 1.0);
  EXPECT_NEAR(d.logz, 0.0, 1e-20);
  EXPECT_LT(std::abs(d.dlogz_dm), 1e-20);
  EXPECT_LT(std::abs(d.d2logz_dm2), 1e-20);
}

TEST(LogZPhi, FiniteFarInTheTail) {
  for (double m : {-30.0, -37.0, -40.0, -100.0, -1e4}) {
    const PhiLogZ d = logz_phi(m, 1.0);
    EXPECT_TRUE(std::isfinite(d.logz));
    EXPECT_TRUE(std::isfinite(d.dlogz_dm));
    EXPECT_TRUE(std::isfinite(d.d2logz_dm2));
    // Tilted variance stays in (0, v).
    EXPECT_GT(1.0 + d.d2logz_dm2, 0.0);
    EXPECT_LT(d.d2logz_dm2, 0.0);
  }
}

TEST(LogZPhi, DerivativesMatchFiniteDifferences) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Moments1 c = random_univariate(rng);
    const PhiLogZ d = logz_phi(c.mean, c.var);
    const double h = 1e-5;
    const double g = (logz_phi(c.mean + h, c.var).logz - logz_phi(c.mean - h, c.var).logz) / (2 * h);
    const double hh =
        (logz_phi(c.mean + h, c.var).dlogz_dm - logz_phi(c.mean - h, c.var).dlogz_dm) / (2 * h);
    EXPECT_TRUE(near_rel(d.dlogz_dm, g, 1e-5)) << d.dlogz_dm << " vs " << g;
    EXPECT_TRUE(near_rel(d.d2logz_dm2, hh, 1e-5)) << d.d2logz_dm2 << " vs " << hh;
  }
}

TEST(LogZOmega, SaturatedFeasibility) {
  Moments2 obj;  // mean (0, 0), cov I: alpha = 0
  const std::vector<Moments2> o{obj};
  const std::vector<Moments1> c{{1e3, 1.0}};
  const OmegaLogZ d = logz_omega(o, c);
  ASSERT_TRUE(d.valid);
  EXPECT_NEAR(std::exp(d.logz), 0.5, 1e-14);
}

TEST(LogZOmega, InfeasibleOtherImposesNothing) {
  Moments2 obj;
  obj.mean << 1.0, -1.0;
  const std::vector<Moments2> o{obj};
  const std::vector<Moments1> c{{-40.0, 1.0}};
  const OmegaLogZ d = logz_omega(o, c);
  ASSERT_TRUE(d.valid);
  EXPECT_NEAR(d.logz, 0.0, 1e-15);
  EXPECT_LT(std::abs(d.obj_grad[0]), 1e-15);
  EXPECT_LT(std::abs(d.obj_hess[0]), 1e-15);
  EXPECT_LT(std::abs(d.con_grad[0]), 1e-15);
  EXPECT_LT(std::abs(d.con_hess[0]), 1e-15);
}

TEST(LogZOmega, HandEvaluatedChain) {
  Moments2 obj;
  obj.cov = 0.5 * Eigen::Matrix2d::Identity();  // difference variance 1
  const std::vector<Moments2> o{obj};
  const std::vector<Moments1> c{{0.0, 1.0}};
  const OmegaLogZ d = logz_omega(o, c);
  ASSERT_TRUE(d.valid);
  EXPECT_NEAR(std::exp(d.logz), 0.75, 1e-14);
  EXPECT_NEAR(d.alpha[0], 0.0, 1e-15);
  EXPECT_NEAR(d.beta[0], 0.0, 1e-15);
}

TEST(LogZOmega, DerivativesMatchFiniteDifferences) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const int k_count = 1 + t % 3, j_count = t % 3;
    std::vector<Moments2> obj;
    std::vector<Moments1> con;
    for (int k = 0; k < k_count; ++k) obj.push_back(random_bivariate(rng));
    for (int j = 0; j < j_count; ++j) con.push_back(random_univariate(rng));
    const OmegaLogZ d = logz_omega(obj, con);
    ASSERT_TRUE(d.valid);

    // Means flattened as (u_0, w_0, u_1, w_1, ..., c_0, ...).
    Vector means(2 * k_count + j_count);
    for (int k = 0; k < k_count; ++k) means.segment<2>(2 * k) = obj[k].mean;
    for (int j = 0; j < j_count; ++j) means[2 * k_count + j] = con[j].mean;
    auto eval = [&](const Vector& v) {
      auto o = obj;
      auto c = con;
      for (int k = 0; k < k_count; ++k) o[k].mean = v.segment<2>(2 * k);
      for (int j = 0; j < j_count; ++j) c[j].mean = v[2 * k_count + j];
      return logz_omega(o, c);
    };
    auto analytic_grad = [&](const OmegaLogZ& r) {
      Vector g(means.size());
      for (int k = 0; k < k_count; ++k) g.segment<2>(2 * k) << r.obj_grad[k], -r.obj_grad[k];
      for (int j = 0; j < j_count; ++j) g[2 * k_count + j] = r.con_grad[j];
      return g;
    };
    const Vector fd = oracle::central_difference([&](const Vector& v) { return eval(v).logz; },
                                                 means, 1e-5);
    const Vector g = analytic_grad(d);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      EXPECT_TRUE(near_rel(g[i], fd[i], 1e-5)) << "grad " << i << ": " << g[i] << " vs " << fd[i];

    // Diagonal second derivatives from differences of the analytic gradient.
    for (Eigen::Index i = 0; i < means.size(); ++i) {
      Vector p = means, m = means;
      p[i] += 1e-5;
      m[i] -= 1e-5;
      const double second = (analytic_grad(eval(p))[i] - analytic_grad(eval(m))[i]) / 2e-5;
      const double expected = i < 2 * k_count ? d.obj_hess[i / 2] : d.con_hess[i - 2 * k_count];
      EXPECT_TRUE(near_rel(expected, second, 1e-5)) << "hess " << i << ": " << expected << " vs "
                                                    << second;
    }
  }
}

TEST(UpdatePhi, FullDampingKeepsFactor) {
  const NatGauss1 old{0.3, 0.2};
  const auto u = update_phi({0.1, 1.0}, logz_phi(0.1, 1.0), old, 0.0);
  ASSERT_TRUE(u);
  EXPECT_EQ(u->nat_mean, old.nat_mean);
  EXPECT_EQ(u->nat_prec, old.nat_prec);
}

TEST(UpdatePhi, SaturatedCavityGivesFlatFactor) {
  const auto u = update_phi({10.0, 1.0}, logz_phi(10.0, 1.0), {}, 1.0);
  ASSERT_TRUE(u);
  EXPECT_LT(std::abs(u->nat_mean), 1e-10);
  EXPECT_LT(std::abs(u->nat_prec), 1e-10);
}

TEST(UpdatePhi, TiltedMomentsMatchQuadrature) {
  const auto u = update_phi({0.0, 1.0}, logz_phi(0.0, 1.0), {}, 1.0);
  ASSERT_TRUE(u);
  const Moments1 t = tilted({0.0, 1.0}, u->nat_prec, u->nat_mean);
  const oracle::Tilted1 q = oracle::phi_tilted(0.0, 1.0);
  EXPECT_NEAR(t.mean, q.mean, 1e-6);
  EXPECT_NEAR(t.var, q.var, 1e-6);
  EXPECT_NEAR(t.mean, 0.79788, 1e-5);
  EXPECT_NEAR(t.var, 0.36338, 1e-5);

  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Moments1 c = random_univariate(rng);
    const auto f = update_phi(c, logz_phi(c.mean, c.var), {}, 1.0);
    ASSERT_TRUE(f);
    const Moments1 tt = tilted(c, f->nat_prec, f->nat_mean);
    const oracle::Tilted1 qq = oracle::phi_tilted(c.mean, c.var);
    EXPECT_NEAR(tt.mean, qq.mean, 1e-6);
    EXPECT_NEAR(tt.var, qq.var, 1e-6);
  }
}

TEST(UpdateOmega, StronglyDominatingParetoGivesFlatFactors) {
  Moments2 obj;
  obj.mean << -10.0, 0.0;
  obj.cov = 0.5 * Eigen::Matrix2d::Identity();
  const std::vector<Moments2> o{obj};
  const std::vector<Moments1> c{{20.0, 1.0}};
  OmegaFactors old;
  old.objectives.resize(1);
  old.constraints.resize(1);
  const auto u = update_omega(logz_omega(o, c), old, 1.0);
  ASSERT_TRUE(u);
  EXPECT_LT(u->objectives[0].nat_prec.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(u->objectives[0].nat_mean.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(std::abs(u->constraints[0].nat_prec), 1e-10);
  EXPECT_LT(std::abs(u->constraints[0].nat_mean), 1e-10);
}

TEST(UpdateOmega, StandardCavityMatchesQuadrature) {
  const std::vector<Moments2> o{Moments2{}};
  OmegaFactors old;
  old.objectives.resize(1);
  const auto u = update_omega(logz_omega(o, {}), old, 1.0);
  ASSERT_TRUE(u);
  const Moments2 t = tilted(o[0], u->objectives[0]);
  const oracle::TiltedOmega q = oracle::omega_tilted(o, {});
  EXPECT_LT((t.mean - q.obj_mean[0]).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((t.cov - q.obj_cov[0]).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(UpdateOmega, RandomCavitiesMatchQuadrature) {
  Rng rng(6);
  for (int t = 0; t < 6; ++t) {
    const int k_count = 1 + t % 2, j_count = t % 3;
    std::vector<Moments2> obj;
    std::vector<Moments1> con;
    for (int k = 0; k < k_count; ++k) obj.push_back(random_bivariate(rng));
    for (int j = 0; j < j_count; ++j) con.push_back(random_univariate(rng));
    OmegaFactors old;
    old.objectives.resize(k_count);
    old.constraints.resize(j_count);
    const auto u = update_omega(logz_omega(obj, con), old, 1.0);
    ASSERT_TRUE(u);
    const oracle::TiltedOmega q = oracle::omega_tilted(obj, con);
    EXPECT_NEAR(std::exp(logz_omega(obj, con).logz), q.z, 1e-8);
    for (int k = 0; k < k_count; ++k) {
      const Moments2 tm = tilted(obj[k], u->objectives[k]);
      EXPECT_LT((tm.mean - q.obj_mean[k]).cwiseAbs().maxCoeff(), 1e-5) << "trial " << t;
      EXPECT_LT((tm.cov - q.obj_cov[k]).cwiseAbs().maxCoeff(), 1e-5) << "trial " << t;
    }
    for (int j = 0; j < j_count; ++j) {
      const Moments1 tc = tilted(con[j], u->constraints[j].nat_prec, u->constraints[j].nat_mean);
      EXPECT_NEAR(tc.mean, q.con_mean[j], 1e-5);
      EXPECT_NEAR(tc.var, q.con_var[j], 1e-5);
    }
  }
}

TEST(UpdateOmega, DampingIsLinearInTheta) {
  Rng rng(7);
  const std::vector<Moments2> obj{random_bivariate(rng), random_bivariate(rng)};
  const std::vector<Moments1> con{random_univariate(rng)};
  OmegaFactors old;
  const Eigen::Vector2d e(1.0, -1.0);
  old.objectives.resize(2);
  for (auto& f : old.objectives) {
    f.nat_prec = 0.2 * e * e.transpose();
    f.nat_mean = -0.1 * e;
  }
  old.constraints = {{0.05, 0.1}};
  const OmegaLogZ d = logz_omega(obj, con);
  const auto full = update_omega(d, old, 1.0);
  for (double theta : {0.5, 0.25, 0.1}) {
    const auto part = update_omega(d, old, theta);
    ASSERT_TRUE(part && full);
    for (int k = 0; k < 2; ++k) {
      const Eigen::Matrix2d dp = part->objectives[k].nat_prec - old.objectives[k].nat_prec;
      const Eigen::Matrix2d df = full->objectives[k].nat_prec - old.objectives[k].nat_prec;
      EXPECT_LT((dp - theta * df).cwiseAbs().maxCoeff(), 1e-14);
      const Eigen::Vector2d mp = part->objectives[k].nat_mean - old.objectives[k].nat_mean;
      const Eigen::Vector2d mf = full->objectives[k].nat_mean - old.objectives[k].nat_mean;
      EXPECT_LT((mp - theta * mf).cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_NEAR(part->constraints[0].nat_prec - old.constraints[0].nat_prec,
                theta * (full->constraints[0].nat_prec - old.constraints[0].nat_prec), 1e-14);
  }
}

TEST(FactorStore, LayoutExcludesSelfPairs) {
  const FactorStore s = make_factor_store(3, 5, 2, 1);
  EXPECT_EQ(s.pairs.size(), 3u * 4u);
  for (const auto& p : s.pairs) EXPECT_NE(p.pareto, p.other);
  EXPECT_EQ(s.phi.size(), 3u);
  EXPECT_EQ(s.omega_obj.size(), s.pairs.size() * 2);
  EXPECT_EQ(s.omega_con.size(), s.pairs.size());
}

TEST(FactorNaturals, MatchExplicitEmbedding) {
  Rng rng(8);
  FactorStore s = make_factor_store(3, 6, 2, 2);
  fill_random(s, rng);
  for (int b = 0; b < 4; ++b) {
    Matrix l1, l2;
    Vector e1, e2;
    factor_naturals(s, b, l1, e1);
    oracle::explicit_factor_naturals(s, b, l2, e2);
    EXPECT_LT((l1 - l2).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((e1 - e2).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ReconstructCpd, ZeroFactorsGivePrior) {
  Rng rng(9);
  const EPPriors pr = random_priors(5, 2, 1, rng);
  const auto cpd = reconstruct_cpd(pr, make_factor_store(2, 5, 2, 1));
  ASSERT_TRUE(cpd);
  for (int b = 0; b < 3; ++b) {
    EXPECT_LT((cpd->mean[b] - pr.mean[b]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((cpd->cov[b] - pr.cov[b]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReconstructCpd, SinglePhiFactorIsLocal) {
  Rng rng(10);
  const EPPriors pr = random_priors(4, 1, 2, rng);
  FactorStore s = make_factor_store(2, 4, 1, 2);
  s.phi[1 * 2 + 0] = {0.4, 0.7};  // Pareto point 1, constraint 0
  const auto cpd = reconstruct_cpd(pr, s);
  ASSERT_TRUE(cpd);
  const Matrix dprec = cpd->cov[1].inverse() - pr.cov[1].inverse();
  const Vector dnat = cpd->cov[1].inverse() * cpd->mean[1] - pr.cov[1].inverse() * pr.mean[1];
  for (int r = 0; r < 4; ++r) {
    EXPECT_NEAR(dnat[r], r == 1 ? 0.4 : 0.0, 1e-9);
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(dprec(r, c), r == 1 && c == 1 ? 0.7 : 0.0, 1e-9);
  }
  for (int b : {0, 2}) {
    EXPECT_LT((cpd->cov[b] - pr.cov[b]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((cpd->mean[b] - pr.mean[b]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReconstructCpd, MatchesDenseGaussianProduct) {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const EPPriors pr = random_priors(4, 1, 1, rng);  // M = 2, N = 2
    FactorStore s = make_factor_store(2, 4, 1, 1);
    fill_random(s, rng);
    const auto cpd = reconstruct_cpd(pr, s);
    ASSERT_TRUE(cpd);
    for (int b = 0; b < 2; ++b) {
      Matrix prec;
      Vector nat;
      oracle::explicit_factor_naturals(s, b, prec, nat);
      Vector mean;
      Matrix cov;
      oracle::dense_cpd(pr.mean[b], pr.cov[b], prec, nat, mean, cov);
      EXPECT_LT((cpd->mean[b] - mean).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((cpd->cov[b] - cov).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((cpd->cov[b] - cpd->cov[b].transpose()).norm(), 1e-15);
    }
  }
}

TEST(ReconstructCpd, IndefiniteResultRejected) {
  Rng rng(12);
  const EPPriors pr = random_priors(3, 1, 1, rng);
  FactorStore s = make_factor_store(1, 3, 1, 1);
  s.phi[0] = {0.0, -1e3};
  EXPECT_FALSE(reconstruct_cpd(pr, s));
}

TEST(RunEp, SinglePointParetoSetLeavesPrior) {
  Points u(1, 1);
  u << 0.4;
  const EPPriors pr = gp_priors(u, 1, 0, 0.3);
  const EPResult r = run_ep(pr, 1);
  EXPECT_TRUE(r.factors.pairs.empty());
  EXPECT_EQ(r.status, EPStatus::Converged);
  EXPECT_LT((r.cpd.cov[0] - pr.cov[0]).norm(), 1e-14);
  EXPECT_LT((r.cpd.mean[0] - pr.mean[0]).norm(), 1e-14);
}

TEST(RunEp, ZeroSweepsLeavesPrior) {
  Rng rng(13);
  const EPPriors pr = random_priors(5, 2, 1, rng);
  EPOptions opts;
  opts.max_sweeps = 0;
  const EPResult r = run_ep(pr, 2, opts);
  for (const auto& g : r.factors.phi) EXPECT_EQ(g.nat_prec, 0.0);
  for (const auto& g : r.factors.omega_obj) EXPECT_EQ(g.nat_prec.norm(), 0.0);
  for (int b = 0; b < 3; ++b) EXPECT_LT((r.cpd.cov[b] - pr.cov[b]).norm(), 1e-12);
}

TEST(RunEp, RejectsEmptyParetoSet) {
  Rng rng(14);
  EXPECT_THROW(run_ep(random_priors(3, 1, 0, rng), 0), std::invalid_argument);
}

TEST(RunEp, ConvergesToPositiveDefiniteFixedPoint) {
  Points u(6, 1);
  u << 0.1, 0.35, 0.6, 0.85, 0.2, 0.7;
  const EPPriors pr = gp_priors(u, 2, 1, 0.3);
  const EPResult r = run_ep(pr, 4);
  EXPECT_EQ(r.status, EPStatus::Converged);
  EXPECT_LT(r.last_change, 1e-4);
  for (int b = 0; b < 3; ++b) {
    EXPECT_EQ(Eigen::LLT<Matrix>(r.cpd.cov[b]).info(), Eigen::Success);
    EXPECT_LT((r.cpd.cov[b] - r.cpd.cov[b].transpose()).norm(), 1e-15);
    // Conditioning on a region shrinks every marginal.
    for (int i = 0; i < 6; ++i) EXPECT_LE(r.cpd.cov[b](i, i), pr.cov[b](i, i) + 1e-9);
  }
  // Pareto points are pushed towards feasibility.
  for (int i = 0; i < 4; ++i) EXPECT_GT(r.cpd.mean[2][i], pr.mean[2][i]);
  const auto again = reconstruct_cpd(pr, r.factors);
  ASSERT_TRUE(again);
  EXPECT_LT((again->cov[0] - r.cpd.cov[0]).norm(), 1e-12);
}

TEST(RunEp, DebugDumpWritesOneLinePerSweep) {
  Points u(3, 1);
  u << 0.1, 0.5, 0.9;
  const EPPriors pr = gp_priors(u, 1, 1, 0.3);
  std::ostringstream os;
  EPOptions opts;
  opts.debug = &os;
  const EPResult r = run_ep(pr, 2, opts);
  int lines = 0;
  for (char ch : os.str()) lines += ch == '\n';
  EXPECT_EQ(lines, r.sweeps);
  EXPECT_NE(os.str().find("\"omega_obj\""), std::string::npos);
}

TEST(RunEp, TinyInstanceAgreesWithImportanceSampling) {
  // Two Pareto points, two observations, one objective pair, one constraint.
  Points u(4, 1);
  u << 0.2, 0.7, 0.45, 0.95;
  EPPriors pr = gp_priors(u, 2, 1, 0.4);
  const EPResult r = run_ep(pr, 2);
  ASSERT_EQ(r.status, EPStatus::Converged);
  Rng rng(15);
  const oracle::ISMoments is = oracle::importance_cpd(pr, 2, 200000, rng);
  ASSERT_GT(is.acceptance, 0.01);
  // EP is an approximation; a coarse agreement is expected at this scale.
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(r.cpd.mean[b][i], is.mean[b][i], 0.15) << "bb " << b << " point " << i;
      EXPECT_NEAR(r.cpd.cov[b](i, i), is.var[b][i], 0.15) << "bb " << b << " point " << i;
    }
}

TEST(ConditioningPoints, DropsObservationsAtParetoPoints) {
  Points pareto(2, 1), obs(3, 1);
  pareto << 0.1, 0.5;
  obs << 0.5, 0.3, 0.1;
  const Points u = conditioning_points(pareto, obs);
  ASSERT_EQ(u.rows(), 3);
  EXPECT_EQ(u(0, 0), 0.1);
  EXPECT_EQ(u(1, 0), 0.5);
  EXPECT_EQ(u(2, 0), 0.3);
}

TEST(UpdateOmega, ExactTiltedVarianceCanExceedCavity) {
  // Objective term with Phi(alpha) ~ 0.9 and a constraint cavity N(1, 1): the
  // tilted density is bimodal and wider than the cavity.
  Moments2 obj;
  obj.mean << 1.2816 * std::sqrt(2.0), 0.0;
  const std::vector<Moments2> o{obj};
  const std::vector<Moments1> c{{1.0, 1.0}};
  const oracle::TiltedOmega q = oracle::omega_tilted(o, c);
  EXPECT_GT(q.con_var[0], 1.0);
  OmegaFactors old;
  old.objectives.resize(1);
  old.constraints.resize(1);
  const auto u = update_omega(logz_omega(o, c), old, 1.0);
  ASSERT_TRUE(u);
  EXPECT_LT(u->constraints[0].nat_prec, 0.0);
  EXPECT_NEAR(tilted(c[0], u->constraints[0].nat_prec, u->constraints[0].nat_mean).var, q.con_var[0],
              1e-6);
}

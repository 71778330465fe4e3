#include "ppesmoc/acquisition.hpp"

#include <cmath>
#include <numbers>

#include "ppesmoc/lbfgsb.hpp"

namespace ppesmoc {

AcquisitionContext make_context(std::vector<std::vector<GPModel>> models, int num_objectives,
                                const Bounds& bounds, std::vector<ParetoSample> samples,
                                const EPOptions& ep) {
  if (models.empty()) throw std::invalid_argument("make_context: no models");
  if (samples.empty()) throw std::invalid_argument("make_context: no Pareto samples");
  AcquisitionContext ctx;
  ctx.num_objectives = num_objectives;
  ctx.num_constraints = static_cast<int>(models[0].size()) - num_objectives;
  ctx.bounds = bounds;
  ctx.models = std::move(models);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const int h = static_cast<int>(s % ctx.models.size());
    const auto& hm = ctx.models[h];
    ConditionedState cond = condition_on_pareto(hm, num_objectives, samples[s], ep);
    BatchConditioner bc(hm, num_objectives, cond);
    ctx.states.push_back({h, std::move(samples[s]), std::move(cond), std::move(bc)});
  }
  return ctx;
}

AcquisitionContext build_context(const SurrogateSet& surrogates, const Bounds& bounds,
                                 const ContextOptions& options, Rng& rng) {
  std::vector<std::vector<GPModel>> models;
  for (int h = 0; h < surrogates.num_hyper(); ++h) models.push_back(surrogates.models(h));
  std::vector<ParetoSample> samples;
  for (int s = 0; s < options.num_pareto_samples; ++s)
    samples.push_back(sample_pareto_set(models[s % models.size()], surrogates.num_objectives(),
                                        bounds, rng, options.pareto));
  return make_context(std::move(models), surrogates.num_objectives(), bounds, std::move(samples),
                      options.ep);
}

double entropy_gaussian(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    Matrix work = cov;
    work.diagonal().array() += 1e-10 * std::max(1.0, cov.diagonal().maxCoeff());
    llt.compute(work);
    if (llt.info() != Eigen::Success) throw ModelError("entropy_gaussian: covariance not PD");
  }
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(cov.rows());
  return 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + logdet);
}

double entropy_gaussian(std::span<const Matrix> blocks) {
  double h = 0.0;
  for (const auto& b : blocks) h += entropy_gaussian(b);
  return h;
}

AlphaValue alpha_terms(const AcquisitionContext& ctx, const Points& x, bool with_gradient) {
  AlphaValue out;
  out.per_blackbox = Vector::Zero(ctx.num_blackboxes());
  if (with_gradient) out.gradient = Matrix::Zero(x.rows(), x.cols());
  for (const auto& st : ctx.states) {
    const BatchReduction r = st.conditioner.reduction(x, with_gradient);
    out.per_blackbox += r.per_blackbox;
    if (with_gradient) out.gradient += r.gradient;
  }
  const double inv = 1.0 / static_cast<double>(ctx.states.size());
  out.per_blackbox *= inv;
  if (with_gradient) out.gradient *= inv;
  out.value = out.per_blackbox.sum();
  return out;
}

double alpha(const AcquisitionContext& ctx, const Points& x) { return alpha_terms(ctx, x).value; }

std::pair<double, Matrix> alpha_with_grad(const AcquisitionContext& ctx, const Points& x) {
  AlphaValue v = alpha_terms(ctx, x, true);
  return {v.value, std::move(v.gradient)};
}

double alpha_sequential(const AcquisitionContext& ctx, const Vector& x) {
  return alpha(ctx, Points(x.transpose()));
}

namespace {

Vector pack(const Points& x) {
  Vector v(x.size());
  for (Eigen::Index b = 0; b < x.rows(); ++b) v.segment(b * x.cols(), x.cols()) = x.row(b).transpose();
  return v;
}

Points unpack(const Vector& v, int batch, int dim) {
  Points x(batch, dim);
  for (int b = 0; b < batch; ++b) x.row(b) = v.segment(b * dim, dim).transpose();
  return x;
}

}  // namespace

BatchProposal optimize_batch(const AcquisitionContext& ctx, int batch_size,
                             const OptimizeOptions& options, Rng& rng) {
  if (options.n_restarts < 1) throw std::invalid_argument("optimize_batch: n_restarts < 1");
  if (batch_size < 1) throw std::invalid_argument("optimize_batch: batch_size < 1");
  const int d = ctx.dim();
  Vector lo(batch_size * d), hi(batch_size * d);
  for (int b = 0; b < batch_size; ++b) {
    lo.segment(b * d, d) = ctx.bounds.col(0);
    hi.segment(b * d, d) = ctx.bounds.col(1);
  }

  auto objective = [&](const Vector& v, Vector& grad) -> double {
    try {
      auto [value, g] = alpha_with_grad(ctx, unpack(v, batch_size, d));
      grad = -pack(g);
      return -value;
    } catch (const ModelError&) {
      grad = Vector::Zero(v.size());
      return INFINITY;
    }
  };

  BatchProposal best;
  best.value = -INFINITY;
  BoxMinimizeOptions bopts;
  bopts.max_iters = options.max_iters;
  for (int r = 0; r < options.n_restarts; ++r) {
    const Points start = uniform_points(ctx.bounds, batch_size, rng);
    Vector g0;
    const double f0 = objective(pack(start), g0);
    BatchProposal cand{start, -f0, -g0};
    if (options.max_iters > 0 && std::isfinite(f0)) {
      const BoxMinimizeResult res = minimize_box(objective, pack(start), lo, hi, bopts);
      if (std::isfinite(res.value) && -res.value >= cand.value) {
        cand.x = unpack(res.x, batch_size, d);
        cand.value = -res.value;
        Vector g;
        objective(res.x, g);
        cand.gradient = -g;
      }
    }
    if (!(best.value >= cand.value) && std::isfinite(cand.value)) best = cand;
    if (r == 0 && !std::isfinite(best.value)) best = cand;
  }
  if (best.gradient.size() == batch_size * d) best.gradient = unpack(best.gradient, batch_size, d);
  return best;
}

}  // namespace ppesmoc

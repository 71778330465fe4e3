#include "ppesmoc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ppesmoc/slice_sampler.hpp"

namespace ppesmoc {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kJitterFloor = 1e-10;
constexpr double kJitterMax = 1e-4;

double scaled_distance(const Vector& x, const Vector& xp, const Vector& ls) {
  return ((x - xp).array() / ls.array()).matrix().norm();
}

// Cholesky of a + diag_add * I with an escalating jitter ladder relative to scale.
bool robust_cholesky(const Matrix& a, double diag_add, double scale, Matrix& lower,
                     double& jitter) {
  const int n = static_cast<int>(a.rows());
  for (double level = kJitterFloor; level <= kJitterMax * 1.0001; level *= 10.0) {
    jitter = level * scale;
    Matrix work = a;
    work.diagonal().array() += diag_add + jitter;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() != Eigen::Success) continue;
    lower = llt.matrixL();
    bool ok = true;
    for (int i = 0; i < n; ++i)
      if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) ok = false;
    if (ok) return true;
  }
  return false;
}

}  // namespace

double kernel_matern52(const Vector& x, const Vector& xp, const KernelParams& params) {
  const double r = scaled_distance(x, xp, params.lengthscales);
  const double sr = kSqrt5 * r;
  return params.amplitude2 * (1.0 + sr + sr * sr / 3.0) * std::exp(-sr);
}

Vector kernel_matern52_grad(const Vector& x, const Vector& xp, const KernelParams& params) {
  const double r = scaled_distance(x, xp, params.lengthscales);
  const double sr = kSqrt5 * r;
  const double c = -(5.0 / 3.0) * params.amplitude2 * (1.0 + sr) * std::exp(-sr);
  return c * ((x - xp).array() / params.lengthscales.array().square()).matrix();
}

Matrix kernel_matrix(const Points& a, const Points& b, const KernelParams& params) {
  const Matrix as = a.array().rowwise() / params.lengthscales.transpose().array();
  const Matrix bs = b.array().rowwise() / params.lengthscales.transpose().array();
  Matrix k(a.rows(), b.rows());
  const int d = static_cast<int>(a.cols());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (int t = 0; t < d; ++t) {
        const double diff = as(i, t) - bs(j, t);
        s += diff * diff;
      }
      const double sr = kSqrt5 * std::sqrt(s);
      k(i, j) = params.amplitude2 * (1.0 + sr + sr * sr / 3.0) * std::exp(-sr);
    }
  }
  return k;
}

GPModel::GPModel(Points x, Vector y, KernelParams params, double prior_mean, double output_scale)
    : x_(std::move(x)),
      y_(std::move(y)),
      params_(std::move(params)),
      prior_mean_(prior_mean),
      output_scale_(output_scale) {
  if (x_.rows() != y_.size()) throw std::invalid_argument("GPModel: inputs and targets differ");
  if (x_.rows() > 0 && x_.cols() != params_.lengthscales.size())
    throw std::invalid_argument("GPModel: lengthscale dimension mismatch");
  const int n = size();
  if (n == 0) {
    x_.resize(0, params_.lengthscales.size());
    chol_.resize(0, 0);
    weights_.resize(0);
    return;
  }
  const Matrix k = kernel_matrix(x_, x_, params_);
  if (!robust_cholesky(k, params_.noise_var, params_.amplitude2, chol_, jitter_))
    throw ModelError("GPModel: covariance not positive definite after jitter");
  weights_ = solve(y_.array() - prior_mean_);
}

Matrix GPModel::half_solve(const Matrix& rhs) const {
  return chol_.triangularView<Eigen::Lower>().solve(rhs);
}

Matrix GPModel::solve(const Matrix& rhs) const {
  return chol_.transpose().triangularView<Eigen::Upper>().solve(half_solve(rhs));
}

Prediction GPModel::predict(const Points& xs) const {
  Prediction p;
  p.cov = kernel_matrix(xs, xs, params_);
  p.mean = Vector::Constant(xs.rows(), prior_mean_);
  if (size() > 0) {
    const Matrix ks = kernel_matrix(x_, xs, params_);
    p.mean.noalias() += ks.transpose() * weights_;
    const Matrix v = half_solve(ks);
    p.cov.noalias() -= v.transpose() * v;
  }
  p.cov = 0.5 * (p.cov + p.cov.transpose()).eval();
  p.cov.diagonal() = p.cov.diagonal().cwiseMax(0.0);
  return p;
}

Vector GPModel::predict_mean(const Points& xs) const {
  Vector mean = Vector::Constant(xs.rows(), prior_mean_);
  if (size() > 0) mean.noalias() += kernel_matrix(xs, x_, params_) * weights_;
  return mean;
}

void GPModel::predict_marginal(const Points& xs, Vector& mean, Vector& var) const {
  mean = Vector::Constant(xs.rows(), prior_mean_);
  var = Vector::Constant(xs.rows(), params_.amplitude2);
  if (size() == 0) return;
  const Matrix ks = kernel_matrix(x_, xs, params_);
  mean.noalias() += ks.transpose() * weights_;
  const Matrix v = half_solve(ks);
  var -= v.colwise().squaredNorm().transpose();
  var = var.cwiseMax(0.0);
}

double GPModel::log_marginal_likelihood() const {
  const int n = size();
  if (n == 0) return 0.0;
  const Vector centered = y_.array() - prior_mean_;
  return -0.5 * centered.dot(weights_) - chol_.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GPModel GPModel::refit(Points x, Vector y) const {
  return GPModel(std::move(x), std::move(y), params_, prior_mean_, output_scale_);
}

GPModel fit(const Points& x, const Vector& y, const KernelParams& params, double prior_mean) {
  return GPModel(x, y, params, prior_mean);
}

Prediction predict(const GPModel& model, const Points& xs) { return model.predict(xs); }

double ParamPrior::log_density(double log_value) const {
  switch (kind) {
    case Kind::LogNormal: {
      const double z = (log_value - a) / b;
      return -0.5 * z * z;
    }
    case Kind::LogUniform:
      return (log_value >= std::log(a) && log_value <= std::log(b)) ? 0.0 : -INFINITY;
    case Kind::Fixed:
      return 0.0;
  }
  return -INFINITY;
}

namespace {

// Log-parameter layout: [log amplitude2, log lengthscales..., log noise_var].
KernelParams unpack(const Vector& phi, int d) {
  KernelParams p;
  p.amplitude2 = std::exp(phi[0]);
  p.lengthscales = phi.segment(1, d).array().exp();
  p.noise_var = std::exp(phi[d + 1]);
  return p;
}

double log_ml(const Points& x, const Vector& y, const KernelParams& p) {
  const int n = static_cast<int>(x.rows());
  Matrix k = kernel_matrix(x, x, p);
  k.diagonal().array() += p.noise_var + kJitterFloor * p.amplitude2;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) return -INFINITY;
  const Matrix l = llt.matrixL();
  const Vector z = l.triangularView<Eigen::Lower>().solve(y);
  const double logdet = l.diagonal().array().log().sum();
  const double v = -0.5 * z.squaredNorm() - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(v) ? v : -INFINITY;
}

}  // namespace

HyperPosterior slice_sample_hypers(const GPModel& model, const HyperPrior& prior, int n_samples,
                                   Rng& rng, const SliceOptions& options) {
  if (model.size() < 1) throw std::invalid_argument("slice_sample_hypers: no data");
  if (n_samples < 1) throw std::invalid_argument("slice_sample_hypers: n_samples < 1");
  const int d = model.dim();
  const Vector& y = model.targets();

  double shift = model.prior_mean();
  double scale = 1.0;
  if (options.standardize) {
    shift = y.mean();
    if (y.size() > 1) {
      const double sd = std::sqrt((y.array() - shift).square().mean());
      if (sd > 1e-12) scale = sd;
    }
  }
  const Vector ys = (y.array() - shift) / scale;

  std::vector<const ParamPrior*> priors;
  priors.push_back(&prior.amplitude2);
  for (int t = 0; t < d; ++t) priors.push_back(&prior.lengthscale(t));
  priors.push_back(&prior.noise_var);

  Vector phi(d + 2);
  if (options.init && options.init->size() == d + 2) {
    phi = *options.init;
  } else {
    const KernelParams& p0 = model.params();
    phi[0] = std::log(p0.amplitude2 / (scale * scale));
    for (int t = 0; t < d; ++t) phi[1 + t] = std::log(p0.lengthscales[t]);
    phi[d + 1] = std::log(std::max(p0.noise_var / (scale * scale), 1e-6));
  }
  std::vector<int> free;
  for (int i = 0; i < d + 2; ++i) {
    const ParamPrior& pr = *priors[i];
    if (pr.is_fixed()) {
      // Fixed values are given in data units.
      const bool output_units = i == 0 || i == d + 1;
      phi[i] = std::log(output_units ? pr.a / (scale * scale) : pr.a);
    } else {
      free.push_back(i);
      if (pr.kind == ParamPrior::Kind::LogUniform)
        phi[i] = std::clamp(phi[i], std::log(pr.a) + 1e-9, std::log(pr.b) - 1e-9);
    }
  }

  const Points& x = model.inputs();
  auto log_post = [&](const Vector& v) -> double {
    double lp = 0.0;
    for (int i : free) lp += priors[i]->log_density(v[i]);
    if (!std::isfinite(lp)) return -INFINITY;
    return lp + log_ml(x, ys, unpack(v, d));
  };

  auto sweep = [&] {
    if (!free.empty()) slice_sweep(log_post, phi, free, options.width, options.max_steps_out, rng);
  };
  for (int i = 0; i < options.burn_in; ++i) sweep();

  HyperPosterior post;
  post.prior_mean = shift;
  post.output_scale = scale;
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < std::max(1, options.thin); ++i) sweep();
    KernelParams p = unpack(phi, d);
    p.amplitude2 *= scale * scale;
    p.noise_var *= scale * scale;
    post.samples.push_back(std::move(p));
  }
  post.chain_state = phi;
  return post;
}

Matrix FunctionSample::features(const Points& x) const {
  Matrix arg = x * frequencies.transpose();
  arg.rowwise() += phases.transpose();
  return scale * arg.array().cos().matrix();
}

Vector FunctionSample::evaluate(const Points& x) const {
  return (features(x) * weights).array() + offset;
}

double FunctionSample::operator()(const Vector& x) const {
  const Vector arg = frequencies * x + phases;
  return offset + scale * arg.array().cos().matrix().dot(weights);
}

FunctionSample sample_prior_function(const KernelParams& params, int num_features, Rng& rng,
                                     double offset) {
  if (num_features < 1) throw std::invalid_argument("sample_function: num_features < 1");
  const int d = static_cast<int>(params.lengthscales.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(5.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  FunctionSample f;
  f.frequencies.resize(num_features, d);
  f.phases.resize(num_features);
  f.weights.resize(num_features);
  for (int i = 0; i < num_features; ++i) {
    const double mix = std::sqrt(chi2(rng) / 5.0);
    for (int t = 0; t < d; ++t) f.frequencies(i, t) = gauss(rng) / params.lengthscales[t] / mix;
    f.phases[i] = phase(rng);
  }
  for (int i = 0; i < num_features; ++i) f.weights[i] = gauss(rng);
  f.scale = std::sqrt(2.0 * params.amplitude2 / num_features);
  f.offset = offset;
  return f;
}

FunctionSample sample_function(const GPModel& model, int num_features, Rng& rng) {
  FunctionSample f = sample_prior_function(model.params(), num_features, rng, model.prior_mean());
  const int n = model.size();
  if (n == 0) return f;

  // Pathwise update of the prior weight draw.
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise = model.params().noise_var + model.jitter();
  const Matrix phi = f.features(model.inputs());
  Vector resid = model.targets().array() - model.prior_mean();
  resid -= phi * f.weights;
  for (int i = 0; i < n; ++i) resid[i] -= std::sqrt(noise) * gauss(rng);

  const Matrix gram = phi * phi.transpose();
  Matrix lower;
  double jitter = 0.0;
  if (!robust_cholesky(gram, noise, model.params().amplitude2, lower, jitter))
    throw ModelError("sample_function: feature Gram matrix not positive definite");
  const Vector z = lower.transpose().triangularView<Eigen::Upper>().solve(
      lower.triangularView<Eigen::Lower>().solve(resid));
  f.weights += phi.transpose() * z;
  return f;
}

SurrogateSet::SurrogateSet(Points x, std::vector<Vector> y, int num_objectives,
                           std::vector<HyperPosterior> hypers)
    : x_(std::move(x)), y_(std::move(y)), num_objectives_(num_objectives),
      hypers_(std::move(hypers)) {
  if (hypers_.size() != y_.size())
    throw std::invalid_argument("SurrogateSet: one hyper posterior per black-box required");
  build();
}

void SurrogateSet::build() {
  const int h_count = hypers_.empty() ? 0 : static_cast<int>(hypers_[0].samples.size());
  models_.assign(h_count, {});
  for (int h = 0; h < h_count; ++h) {
    for (std::size_t b = 0; b < y_.size(); ++b) {
      const HyperPosterior& hp = hypers_[b];
      models_[h].emplace_back(x_, y_[b], hp.samples[h], hp.prior_mean, hp.output_scale);
    }
  }
}

int SurrogateSet::dim() const {
  return hypers_.empty() ? static_cast<int>(x_.cols())
                         : static_cast<int>(hypers_[0].samples[0].lengthscales.size());
}

SurrogateSet SurrogateSet::with_observation(const Vector& x, const Vector& values) const {
  SurrogateSet next;
  next.num_objectives_ = num_objectives_;
  next.hypers_ = hypers_;
  next.x_.resize(x_.rows() + 1, dim());
  next.x_.topRows(x_.rows()) = x_;
  next.x_.row(x_.rows()) = x.transpose();
  for (std::size_t b = 0; b < y_.size(); ++b) {
    Vector yb(y_[b].size() + 1);
    yb << y_[b], values[b];
    next.y_.push_back(std::move(yb));
  }
  next.models_.resize(models_.size());
  for (std::size_t h = 0; h < models_.size(); ++h)
    for (std::size_t b = 0; b < y_.size(); ++b)
      next.models_[h].push_back(models_[h][b].refit(next.x_, next.y_[b]));
  return next;
}

Vector SurrogateSet::mean_at(const Vector& x) const {
  Vector mean = Vector::Zero(num_blackboxes());
  const Points xs = x.transpose();
  for (const auto& models : models_)
    for (int b = 0; b < num_blackboxes(); ++b) mean[b] += models[b].predict_mean(xs)[0];
  return mean / static_cast<double>(models_.size());
}

SurrogateSet fit_surrogates(const Points& x, const std::vector<Vector>& y, int num_objectives,
                            const SurrogateOptions& options, Rng& rng,
                            const SurrogateSet* previous) {
  const int d = static_cast<int>(x.cols());
  std::vector<HyperPosterior> hypers;
  for (std::size_t b = 0; b < y.size(); ++b) {
    const double var = y[b].size() > 1 ? (y[b].array() - y[b].mean()).square().mean() : 1.0;
    KernelParams init;
    init.amplitude2 = var > 1e-24 ? var : 1.0;
    init.lengthscales = Vector::Constant(d, 0.5);
    init.noise_var = 1e-3 * init.amplitude2;
    SliceOptions slice = options.slice;
    if (previous && previous->hypers().size() == y.size()) {
      slice.init = previous->hypers()[b].chain_state;
      slice.burn_in = options.warm_burn_in;
    }
    const GPModel base(x, y[b], init, y[b].mean());
    hypers.push_back(slice_sample_hypers(base, options.prior, options.num_hyper, rng, slice));
  }
  return SurrogateSet(x, y, num_objectives, std::move(hypers));
}

}  // namespace ppesmoc

#include "ppesmoc/exact_alpha.hpp"

#include <cmath>
#include <random>

#include "ppesmoc/entropy.hpp"

namespace ppesmoc {

namespace {

// Appends row to pts unless an existing row lies within tol; returns its index.
int add_unique(std::vector<Vector>& pts, const Vector& row, double tol = 1e-10) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    if ((pts[i] - row).norm() < tol) return static_cast<int>(i);
  pts.push_back(row);
  return static_cast<int>(pts.size()) - 1;
}

Matrix robust_chol(Matrix cov, double amplitude2) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (double jitter = 1e-10; jitter <= 1e-4; jitter *= 10.0) {
    Matrix work = cov;
    work.diagonal().array() += jitter * amplitude2;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw ModelError("exact_alpha: joint covariance not positive definite");
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n01;
  Matrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = n01(rng);
  return z;
}

}  // namespace

ExactAlphaOracle::ExactAlphaOracle(const AcquisitionContext& ctx, const Points& grid,
                                   const ExactAlphaOptions& options, Rng& rng)
    : options_(options), grid_(grid), num_blackboxes_(ctx.num_blackboxes()) {
  if (options.n_samples <= options.neighbours)
    throw std::invalid_argument("ExactAlphaOracle: n_samples too small");
  const int n = options.n_samples;
  const int n_grid = static_cast<int>(grid.rows());
  const int k_count = ctx.num_objectives;
  const int g_count = num_blackboxes_;

  for (const auto& st : ctx.states) {
    const auto& models = ctx.models[st.hyper_index];
    std::vector<Vector> pts;
    std::vector<int> grid_at(n_grid), pareto_at;
    for (int i = 0; i < n_grid; ++i) grid_at[i] = add_unique(pts, grid.row(i).transpose());
    const Points& obs = models[0].inputs();
    for (Eigen::Index i = 0; i < obs.rows(); ++i) add_unique(pts, obs.row(i).transpose());
    for (int m = 0; m < st.pareto.size(); ++m)
      pareto_at.push_back(add_unique(pts, st.pareto.points.row(m).transpose()));
    const int n_pts = static_cast<int>(pts.size());
    Points joint(n_pts, ctx.dim());
    for (int i = 0; i < n_pts; ++i) joint.row(i) = pts[i].transpose();

    std::vector<Vector> mean(g_count);
    std::vector<Matrix> chol(g_count);
    std::vector<double> scale(g_count), noise_std(g_count);
    for (int g = 0; g < g_count; ++g) {
      const GPModel& model = models[g];
      const Prediction pred = model.predict(joint);
      scale[g] = model.output_scale();
      mean[g] = pred.mean / scale[g];
      chol[g] = robust_chol(pred.cov / (scale[g] * scale[g]),
                            model.params().amplitude2 / (scale[g] * scale[g]));
      noise_std[g] = std::sqrt(model.params().noise_var) / scale[g];
    }

    StateDraws sd;
    sd.before.assign(g_count, Matrix(n, n_grid));
    sd.after.assign(g_count, Matrix(n, n_grid));
    std::normal_distribution<double> n01;
    sd.noise.resize(options.max_batch);
    for (int slot = 0; slot < options.max_batch; ++slot)
      for (int g = 0; g < g_count; ++g) {
        Matrix e(n, n_grid);
        for (Eigen::Index j = 0; j < e.cols(); ++j)
          for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = noise_std[g] * n01(rng);
        sd.noise[slot].push_back(std::move(e));
      }

    std::vector<char> feasible(n_pts);
    auto accepted_draw = [&](const std::vector<Matrix>& f, int c) {
      for (int p = 0; p < n_pts; ++p) {
        bool ok = true;
        for (int g = k_count; g < g_count && ok; ++g) ok = f[g](p, c) >= 0.0;
        feasible[p] = ok;
      }
      for (int star : pareto_at) {
        if (!feasible[star]) return false;
        for (int p = 0; p < n_pts; ++p) {
          if (p == star || !feasible[p]) continue;
          bool weakly = true;
          for (int k = 0; k < k_count && weakly; ++k) weakly = f[k](p, c) <= f[k](star, c);
          if (weakly) return false;
        }
      }
      return true;
    };

    int filled_before = 0, filled_after = 0;
    long long drawn = 0, accepted = 0;
    std::vector<Matrix> f(g_count);
    while (filled_before < n || filled_after < n) {
      const int cols = options.block;
      for (int g = 0; g < g_count; ++g) {
        f[g] = chol[g] * normal_matrix(n_pts, cols, rng);
        f[g].colwise() += mean[g];
      }
      for (int c = 0; c < cols; ++c) {
        if (filled_before < n) {
          for (int g = 0; g < g_count; ++g)
            for (int i = 0; i < n_grid; ++i) sd.before[g](filled_before, i) = f[g](grid_at[i], c);
          ++filled_before;
          continue;
        }
        if (filled_after >= n) break;
        ++drawn;
        if (!options.accept_all && !accepted_draw(f, c)) continue;
        ++accepted;
        for (int g = 0; g < g_count; ++g)
          for (int i = 0; i < n_grid; ++i) sd.after[g](filled_after, i) = f[g](grid_at[i], c);
        ++filled_after;
      }
      if (drawn >= 100000 && static_cast<double>(accepted) < options.min_acceptance * drawn)
        throw InsufficientSamplesError("exact_alpha: acceptance rate below threshold");
    }
    acceptance_.push_back(drawn > 0 ? static_cast<double>(accepted) / drawn : 1.0);
    states_.push_back(std::move(sd));
  }
}

Vector ExactAlphaOracle::state_values(std::span<const int> grid_indices) const {
  const int nb = static_cast<int>(grid_indices.size());
  if (nb < 1 || nb > options_.max_batch)
    throw std::invalid_argument("ExactAlphaOracle: batch size outside [1, max_batch]");
  for (int i : grid_indices)
    if (i < 0 || i >= grid_size()) throw std::out_of_range("ExactAlphaOracle: grid index");
  const int n = options_.n_samples;
  const int g_count = num_blackboxes_;
  Vector out(states_.size());
  Matrix yb(n, nb * g_count), ya(n, nb * g_count);
  for (std::size_t s = 0; s < states_.size(); ++s) {
    const StateDraws& sd = states_[s];
    for (int b = 0; b < nb; ++b)
      for (int g = 0; g < g_count; ++g) {
        const int col = b * g_count + g;
        const auto& e = sd.noise[b][g].col(grid_indices[b]);
        yb.col(col) = sd.before[g].col(grid_indices[b]) + e;
        ya.col(col) = sd.after[g].col(grid_indices[b]) + e;
      }
    out[s] = 2.0 * (knn_entropy(yb, options_.neighbours) - knn_entropy(ya, options_.neighbours));
  }
  return out;
}

double ExactAlphaOracle::value(std::span<const int> grid_indices) const {
  return state_values(grid_indices).mean();
}

double exact_alpha_mc(const AcquisitionContext& ctx, const Points& x, int n_samples, Rng& rng) {
  ExactAlphaOptions opts;
  opts.n_samples = n_samples;
  opts.max_batch = static_cast<int>(x.rows());
  const ExactAlphaOracle oracle(ctx, x, opts, rng);
  std::vector<int> idx(x.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return oracle.value(idx);
}

}  // namespace ppesmoc

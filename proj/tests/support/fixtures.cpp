#include "fixtures.hpp"

#include "ppesmoc/pareto.hpp"

namespace fixture {

ppesmoc::KernelParams kernel(int dim, double lengthscale, double noise_var) {
  ppesmoc::KernelParams k;
  k.amplitude2 = 1.0;
  k.lengthscales = ppesmoc::Vector::Constant(dim, lengthscale);
  k.noise_var = noise_var;
  return k;
}

Instance make_instance(const InstanceOptions& o) {
  using namespace ppesmoc;
  Instance inst;
  const KernelParams k = kernel(o.dim, o.lengthscale, o.noise_var);
  inst.problem = make_synthetic(o.seed, o.dim, o.num_objectives, o.num_constraints, k, 500);
  Rng rng(derive_seed(o.seed, 100));
  inst.x = uniform_points(unit_bounds(o.dim), o.num_observations, rng);
  const int g_count = o.num_objectives + o.num_constraints;
  inst.y.assign(g_count, Vector(o.num_observations));
  for (int i = 0; i < o.num_observations; ++i) {
    const Evaluation e = evaluate_noisy(inst.problem.spec, inst.x.row(i).transpose(), rng);
    for (int g = 0; g < g_count; ++g)
      inst.y[g][i] = g < o.num_objectives ? e.objectives[g] : e.constraints[g - o.num_objectives];
  }
  for (int h = 0; h < o.num_hyper; ++h) {
    KernelParams kh = k;
    kh.lengthscales *= 1.0 + 0.1 * h;
    std::vector<GPModel> hm;
    for (int g = 0; g < g_count; ++g) hm.emplace_back(inst.x, inst.y[g], kh, 0.0, 1.0);
    inst.models.push_back(std::move(hm));
  }
  ParetoOptions popts;
  popts.grid_size = o.pareto_grid;
  popts.max_points = o.pareto_max;
  popts.num_features = o.num_features;
  std::vector<ParetoSample> samples;
  for (int s = 0; s < o.num_pareto_samples; ++s)
    samples.push_back(sample_pareto_set(inst.models[s % o.num_hyper], o.num_objectives,
                                        unit_bounds(o.dim), rng, popts,
                                        o.pareto_candidates.rows() ? &o.pareto_candidates : nullptr));
  inst.ctx = make_context(inst.models, o.num_objectives, unit_bounds(o.dim), std::move(samples));
  return inst;
}

}  // namespace fixture

#include "ppesmoc/baselines.hpp"

namespace ppesmoc {

Points random_batch(const Bounds& bounds, int batch_size, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("random_batch: batch size must be >= 1");
  return uniform_points(bounds, batch_size, rng);
}

SequentialBatch parallel_sequential(const ContextBuilder& build, const SurrogateSet& surrogates,
                                    int batch_size, const OptimizeOptions& options, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("parallel_sequential: batch size must be >= 1");
  SequentialBatch out;
  out.x.resize(batch_size, surrogates.dim());
  SurrogateSet current = surrogates;
  for (int i = 0; i < batch_size; ++i) {
    if (i > 0) {
      const Vector prev = out.x.row(i - 1).transpose();
      current = current.with_observation(prev, current.mean_at(prev));
    }
    ++out.refits;
    const AcquisitionContext ctx = build(current, rng);
    out.x.row(i) = optimize_batch(ctx, 1, options, rng).x.row(0);
  }
  return out;
}

}  // namespace ppesmoc

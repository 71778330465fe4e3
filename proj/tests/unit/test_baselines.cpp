#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ppesmoc/baselines.hpp"

using namespace ppesmoc;

namespace {

SurrogateSet surrogates(const fixture::Instance& inst, int num_objectives) {
  HyperPosterior hp;
  hp.samples = {inst.models[0][0].params()};
  std::vector<HyperPosterior> hypers(inst.y.size(), hp);
  return SurrogateSet(inst.x, inst.y, num_objectives, hypers);
}

AcquisitionContext context_for(const SurrogateSet& s, Rng& rng) {
  std::vector<ParetoSample> samples;
  ParetoOptions popts;
  popts.grid_size = 200;
  popts.num_features = 300;
  for (int i = 0; i < 2; ++i)
    samples.push_back(sample_pareto_set(s.models(0), s.num_objectives(), unit_bounds(s.dim()), rng, popts));
  return make_context({s.models(0)}, s.num_objectives(), unit_bounds(s.dim()), std::move(samples));
}

}  // namespace

TEST(RandomBatch, WithinBoundsAndDeterministic) {
  Bounds b(2, 2);
  b << -1.0, 2.0, 10.0, 10.5;
  Rng r1(1), r2(1);
  const Points x = random_batch(b, 50, r1);
  EXPECT_EQ(x, random_batch(b, 50, r2));
  for (int d = 0; d < 2; ++d) {
    EXPECT_GE(x.col(d).minCoeff(), b(d, 0));
    EXPECT_LE(x.col(d).maxCoeff(), b(d, 1));
  }
}

TEST(RandomBatch, UniformMarginals) {
  Bounds b(3, 2);
  b << 0.0, 1.0, -5.0, 5.0, 2.0, 3.0;
  Rng rng(2);
  const Points x = random_batch(b, 10000, rng);
  for (int d = 0; d < 3; ++d) {
    std::vector<double> col(x.col(d).data(), x.col(d).data() + x.rows());
    EXPECT_GT(oracle::ks_uniform_pvalue(col, b(d, 0), b(d, 1)), 0.01) << "dim " << d;
  }
}

TEST(RandomBatch, RejectsEmptyBatch) {
  Rng rng(3);
  EXPECT_THROW(random_batch(unit_bounds(1), 0, rng), std::invalid_argument);
}

TEST(ParallelSequential, SinglePointMatchesBatchOptimizer) {
  fixture::InstanceOptions o;
  o.dim = 2;
  const auto inst = fixture::make_instance(o);
  const OptimizeOptions opts{3, 30};
  auto build = [&](const SurrogateSet&, Rng&) { return inst.ctx; };
  Rng a(4), b(4);
  const SequentialBatch seq = parallel_sequential(build, surrogates(inst, 2), 1, opts, a);
  const BatchProposal direct = optimize_batch(inst.ctx, 1, opts, b);
  EXPECT_EQ(seq.refits, 1);
  EXPECT_LT((seq.x - direct.x).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ParallelSequential, HallucinatesPreviousPoints) {
  fixture::InstanceOptions o;
  o.noise_var = 1e-6;
  const auto inst = fixture::make_instance(o);
  const SurrogateSet base = surrogates(inst, 2);
  std::vector<SurrogateSet> seen;
  auto build = [&](const SurrogateSet& s, Rng& rng) {
    seen.push_back(s);
    return context_for(s, rng);
  };
  Rng rng(5);
  const SequentialBatch seq = parallel_sequential(build, base, 3, {2, 20}, rng);
  EXPECT_EQ(seq.refits, 3);
  ASSERT_EQ(seen.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(seen[i].inputs().rows(), inst.x.rows() + i);
  EXPECT_EQ(base.inputs().rows(), inst.x.rows());

  const Vector x1 = seq.x.row(0).transpose();
  const Vector h1 = base.mean_at(x1);
  EXPECT_LT((seen[1].mean_at(x1) - h1).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(Vector(seen[1].inputs().bottomRows(1).transpose()), x1);
  for (int g = 0; g < 3; ++g) {
    const GPModel& m = seen[1].models(0)[g];
    Vector mean, var;
    m.predict_marginal(Points(x1.transpose()), mean, var);
    EXPECT_LT(var[0], 2.0 * m.params().noise_var);
    EXPECT_EQ(m.params().lengthscales, base.models(0)[g].params().lengthscales);
  }
  for (int b = 0; b < 3; ++b) {
    EXPECT_GE(seq.x.row(b).minCoeff(), 0.0);
    EXPECT_LE(seq.x.row(b).maxCoeff(), 1.0);
  }
}

TEST(ParallelSequential, RefitCountEqualsBatchSize) {
  fixture::InstanceOptions o;
  const auto inst = fixture::make_instance(o);
  int calls = 0;
  auto build = [&](const SurrogateSet&, Rng&) {
    ++calls;
    return inst.ctx;
  };
  for (int b : {1, 2, 5}) {
    calls = 0;
    Rng rng(6);
    EXPECT_EQ(parallel_sequential(build, surrogates(inst, 2), b, {1, 0}, rng).refits, b);
    EXPECT_EQ(calls, b);
  }
}

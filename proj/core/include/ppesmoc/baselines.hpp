#pragma once

#include <functional>

#include "ppesmoc/acquisition.hpp"
#include "ppesmoc/gp.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

Points random_batch(const Bounds& bounds, int batch_size, Rng& rng);

using ContextBuilder = std::function<AcquisitionContext(const SurrogateSet&, Rng&)>;

struct SequentialBatch {
  Points x;
  // Surrogate sets the acquisition was built on: the given one plus one per
  // hallucinated point.
  int refits = 0;
};

// Greedy batch of sequential acquisition maxima. After each choice every
// black-box is hallucinated at its hyper-averaged posterior mean and the
// surrogates are refitted with fixed hyper-parameters.
SequentialBatch parallel_sequential(const ContextBuilder& build, const SurrogateSet& surrogates,
                                    int batch_size, const OptimizeOptions& options, Rng& rng);

}  // namespace ppesmoc

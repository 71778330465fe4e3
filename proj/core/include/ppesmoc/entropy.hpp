#pragma once

#include "ppesmoc/types.hpp"

namespace ppesmoc {

// Kozachenko-Leonenko nearest-neighbour differential entropy (nats) of the
// rows of samples, using the distance to the k-th neighbour.
double knn_entropy(const Matrix& samples, int k = 3);

}  // namespace ppesmoc

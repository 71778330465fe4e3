#include "ppesmoc/types.hpp"

namespace ppesmoc {

Bounds unit_bounds(int dim) {
  Bounds b(dim, 2);
  b.col(0).setZero();
  b.col(1).setOnes();
  return b;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Points uniform_points(const Bounds& bounds, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int d = static_cast<int>(bounds.rows());
  Points x(n, d);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < d; ++t)
      x(i, t) = bounds(t, 0) + u(rng) * (bounds(t, 1) - bounds(t, 0));
  return x;
}

}  // namespace ppesmoc

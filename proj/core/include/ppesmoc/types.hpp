#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ppesmoc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Rows of a Points matrix are input locations.
using Points = Eigen::MatrixXd;

// Box bounds stored as a d x 2 matrix of [lo, hi] rows.
using Bounds = Eigen::MatrixX2d;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Bounds unit_bounds(int dim);

// Independent child stream derived from a parent seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Points uniform_points(const Bounds& bounds, int n, Rng& rng);

}  // namespace ppesmoc

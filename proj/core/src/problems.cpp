#include "ppesmoc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace ppesmoc {

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

ProblemSpec make(std::string name, std::initializer_list<std::pair<double, double>> box, int k,
                 int j, std::function<Evaluation(const Vector&)> fn) {
  ProblemSpec p;
  p.name = std::move(name);
  p.dim = static_cast<int>(box.size());
  p.bounds.resize(p.dim, 2);
  int t = 0;
  for (const auto& [lo, hi] : box) {
    p.bounds(t, 0) = lo;
    p.bounds(t, 1) = hi;
    ++t;
  }
  p.num_objectives = k;
  p.num_constraints = j;
  p.evaluator = std::move(fn);
  p.noise_std_objectives = Vector::Zero(k);
  p.noise_std_constraints = Vector::Zero(j);
  return p;
}

double sq(double v) { return v * v; }

ProblemSpec bnh() {
  return make("bnh", {{0, 5}, {0, 3}}, 2, 2, [](const Vector& x) {
    return Evaluation{vec({4 * sq(x[0]) + 4 * sq(x[1]), sq(x[0] - 5) + sq(x[1] - 5)}),
                      vec({25 - (sq(x[0] - 5) + sq(x[1])), sq(x[0] - 8) + sq(x[1] + 3) - 7.7})};
  });
}

ProblemSpec srn() {
  return make("srn", {{-20, 20}, {-20, 20}}, 2, 2, [](const Vector& x) {
    return Evaluation{vec({2 + sq(x[0] - 2) + sq(x[1] - 2), 9 * x[0] - sq(x[1] - 1)}),
                      vec({225 - (sq(x[0]) + sq(x[1])), -(x[0] - 3 * x[1] + 10)})};
  });
}

ProblemSpec tnk() {
  return make("tnk", {{0, std::numbers::pi}, {0, std::numbers::pi}}, 2, 2, [](const Vector& x) {
    const double angle = std::atan2(x[0], x[1]);
    return Evaluation{vec({x[0], x[1]}),
                      vec({sq(x[0]) + sq(x[1]) - 1 - 0.1 * std::cos(16 * angle),
                           0.5 - (sq(x[0] - 0.5) + sq(x[1] - 0.5))})};
  });
}

ProblemSpec osy() {
  return make("osy", {{0, 10}, {0, 10}, {1, 5}, {0, 6}, {1, 5}, {0, 10}}, 2, 6,
              [](const Vector& x) {
                const double f1 = -(25 * sq(x[0] - 2) + sq(x[1] - 2) + sq(x[2] - 1) +
                                    sq(x[3] - 4) + sq(x[4] - 1));
                return Evaluation{vec({f1, x.squaredNorm()}),
                                  vec({x[0] + x[1] - 2, 6 - x[0] - x[1], 2 - x[1] + x[0],
                                       2 - x[0] + 3 * x[1], 4 - sq(x[2] - 3) - x[3],
                                       sq(x[4] - 3) + x[5] - 4})};
              });
}

ProblemSpec constr() {
  return make("constr", {{0.1, 10}, {0, 5}}, 2, 2, [](const Vector& x) {
    return Evaluation{vec({x[0], (1 + x[1]) / x[0]}),
                      vec({x[1] + 9 * x[0] - 6, -x[1] + 9 * x[0] - 1})};
  });
}

ProblemSpec two_bar_truss() {
  return make("two_bar_truss", {{0, 0.01}, {0, 0.01}, {1, 3}}, 2, 1, [](const Vector& in) {
    const double x1 = std::max(in[0], 1e-9);
    const double x2 = std::max(in[1], 1e-9);
    const double x3 = in[2];
    const double stress = std::max(20 * std::sqrt(16 + x3) / (x1 * x3),
                                   80 * std::sqrt(1 + sq(x3)) / (x2 * x3));
    return Evaluation{vec({x1 * std::sqrt(16 + sq(x3)) + x2 * std::sqrt(1 + sq(x3)), stress}),
                      vec({1e5 - stress})};
  });
}

}  // namespace

Evaluation evaluate(const ProblemSpec& problem, const Vector& x) {
  if (x.size() != problem.dim) throw std::domain_error("evaluate: dimension mismatch");
  for (int t = 0; t < problem.dim; ++t) {
    const double tol = 1e-12 * (1.0 + std::abs(problem.bounds(t, 1) - problem.bounds(t, 0)));
    if (!(x[t] >= problem.bounds(t, 0) - tol && x[t] <= problem.bounds(t, 1) + tol))
      throw std::domain_error("evaluate: point outside bounds of " + problem.name);
  }
  return problem.evaluator(x);
}

Evaluation evaluate_noisy(const ProblemSpec& problem, const Vector& x, Rng& rng) {
  Evaluation e = evaluate(problem, x);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < problem.num_objectives; ++k)
    e.objectives[k] += problem.noise_std_objectives[k] * gauss(rng);
  for (int j = 0; j < problem.num_constraints; ++j)
    e.constraints[j] += problem.noise_std_constraints[j] * gauss(rng);
  return e;
}

std::vector<std::string> benchmark_names() {
  return {"bnh", "srn", "tnk", "osy", "constr", "two_bar_truss"};
}

ProblemSpec make_benchmark(std::string_view name) {
  if (name == "bnh") return bnh();
  if (name == "srn") return srn();
  if (name == "tnk") return tnk();
  if (name == "osy") return osy();
  if (name == "constr") return constr();
  if (name == "two_bar_truss") return two_bar_truss();
  throw std::invalid_argument("unknown benchmark: " + std::string(name));
}

SyntheticGPProblem make_synthetic(std::uint64_t seed, int dim, int num_objectives,
                                  int num_constraints, const KernelParams& kernel,
                                  int num_features) {
  if (num_features < 1) throw std::invalid_argument("make_synthetic: num_features < 1");
  if (dim < 1 || num_objectives < 1 || num_constraints < 0)
    throw std::invalid_argument("make_synthetic: bad sizes");
  if (kernel.lengthscales.size() != dim)
    throw std::invalid_argument("make_synthetic: lengthscale dimension mismatch");

  SyntheticGPProblem sp;
  sp.seed = seed;
  sp.dim = dim;
  sp.num_objectives = num_objectives;
  sp.num_constraints = num_constraints;
  sp.kernel = kernel;
  Rng rng(seed);
  for (int i = 0; i < num_objectives + num_constraints; ++i)
    sp.functions.push_back(sample_prior_function(kernel, num_features, rng));

  auto functions = sp.functions;
  const int k = num_objectives;
  sp.spec.name = "synthetic_" + std::to_string(seed) + "_d" + std::to_string(dim) + "_k" +
                 std::to_string(num_objectives) + "_j" + std::to_string(num_constraints);
  sp.spec.dim = dim;
  sp.spec.bounds = unit_bounds(dim);
  sp.spec.num_objectives = num_objectives;
  sp.spec.num_constraints = num_constraints;
  sp.spec.evaluator = [functions, k](const Vector& x) {
    const int total = static_cast<int>(functions.size());
    Evaluation e{Vector(k), Vector(total - k)};
    for (int i = 0; i < total; ++i) (i < k ? e.objectives[i] : e.constraints[i - k]) = functions[i](x);
    return e;
  };
  const double sd = std::sqrt(kernel.noise_var);
  sp.spec.noise_std_objectives = Vector::Constant(num_objectives, sd);
  sp.spec.noise_std_constraints = Vector::Constant(num_constraints, sd);
  return sp;
}

Vector function_ranges(const ProblemSpec& problem, int n_probe, std::uint64_t seed) {
  Rng rng(seed);
  const Points probe = uniform_points(problem.bounds, n_probe, rng);
  const int total = problem.num_objectives + problem.num_constraints;
  Vector lo = Vector::Constant(total, INFINITY);
  Vector hi = Vector::Constant(total, -INFINITY);
  for (int i = 0; i < n_probe; ++i) {
    const Evaluation e = evaluate(problem, probe.row(i).transpose());
    Vector v(total);
    v << e.objectives, e.constraints;
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return hi - lo;
}

ProblemSpec with_range_noise(ProblemSpec problem, double fraction) {
  static std::mutex mutex;
  static std::map<std::string, Vector> cache;
  Vector ranges;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(problem.name);
    if (it == cache.end()) it = cache.emplace(problem.name, function_ranges(problem)).first;
    ranges = it->second;
  }
  problem.noise_std_objectives = fraction * ranges.head(problem.num_objectives);
  problem.noise_std_constraints = fraction * ranges.tail(problem.num_constraints);
  return problem;
}

}  // namespace ppesmoc

#include "ppesmoc/slice_sampler.hpp"

#include <cmath>

namespace ppesmoc {

namespace {

double finite_or_neg_inf(double v) { return std::isfinite(v) ? v : -INFINITY; }

}  // namespace

double slice_step(const std::function<double(double)>& log_density, double x0, double width,
                  int max_steps_out, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0 = finite_or_neg_inf(log_density(x0));
  if (!std::isfinite(f0)) return x0;
  const double level = f0 + std::log(u(rng));

  double lo = x0 - width * u(rng);
  double hi = lo + width;
  std::uniform_int_distribution<int> split(0, max_steps_out);
  int left = split(rng);
  int right = max_steps_out - left;
  while (left-- > 0 && finite_or_neg_inf(log_density(lo)) > level) lo -= width;
  while (right-- > 0 && finite_or_neg_inf(log_density(hi)) > level) hi += width;

  for (int shrink = 0; shrink < 200; ++shrink) {
    const double x1 = lo + u(rng) * (hi - lo);
    if (finite_or_neg_inf(log_density(x1)) > level) return x1;
    if (x1 < x0)
      lo = x1;
    else
      hi = x1;
  }
  return x0;
}

void slice_sweep(const std::function<double(const Vector&)>& log_density, Vector& x,
                 const std::vector<int>& coords, double width, int max_steps_out, Rng& rng) {
  Vector work = x;
  for (int c : coords) {
    auto along = [&](double v) {
      work[c] = v;
      return log_density(work);
    };
    const double next = slice_step(along, x[c], width, max_steps_out, rng);
    x[c] = next;
    work[c] = next;
  }
}

}  // namespace ppesmoc

#include "ppesmoc/normal.hpp"

#include <cmath>
#include <limits>

namespace ppesmoc::normal {

namespace {

constexpr double kAsymptoticCut = -37.0;

// 1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - 945/z^10
double asymptotic_series(double z) {
  const double w = 1.0 / (z * z);
  return 1.0 + w * (-1.0 + w * (3.0 + w * (-15.0 + w * (105.0 - 945.0 * w))));
}

}  // namespace

double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_cdf(double z) {
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z / std::sqrt(2.0)));
  if (z > kAsymptoticCut) return std::log(cdf(z));
  return log_pdf(z) - std::log(-z) + std::log(asymptotic_series(z));
}

double mills(double z) {
  if (z > kAsymptoticCut) return std::exp(log_pdf(z) - log_cdf(z));
  return -z / asymptotic_series(z);
}

double log1mexp(double x) {
  if (x >= 0.0) return -std::numeric_limits<double>::infinity();
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

}  // namespace ppesmoc::normal

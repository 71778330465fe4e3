#pragma once

namespace ppesmoc::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double pdf(double z);
double log_pdf(double z);
double cdf(double z);

// log Phi(z); asymptotic series below -37.
double log_cdf(double z);

// phi(z) / Phi(z), stable for very negative z.
double mills(double z);

// log(1 - exp(x)) for x <= 0.
double log1mexp(double x);

}  // namespace ppesmoc::normal

#pragma once

#include <array>
#include <cmath>

#include "ppesmoc/normal.hpp"

namespace ppesmoc {

// Forward-mode dual number carrying N directional derivatives.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constants

  static Dual variable(double value, int index) {
    Dual x(value);
    x.d[index] = 1.0;
    return x;
  }

  // Result with value fv and derivative scale * this.d.
  Dual chain(double fv, double scale) const {
    Dual r(fv);
    for (int i = 0; i < N; ++i) r.d[i] = scale * d[i];
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
  Dual operator-() const { return chain(-v, -1.0); }
};

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double b, const Dual<N>& a) { return (-a) + b; }
template <int N> Dual<N> operator*(Dual<N> a, double b) { return a.chain(a.v * b, b); }
template <int N> Dual<N> operator*(double b, Dual<N> a) { return a.chain(a.v * b, b); }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a.chain(a.v / b, 1.0 / b); }

// Scalar functions shared by double and Dual code paths.
inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.v; }

inline double sqrt_s(double x) { return std::sqrt(x); }
inline double exp_s(double x) { return std::exp(x); }
inline double log_s(double x) { return std::log(x); }
inline double log_cdf_s(double x) { return normal::log_cdf(x); }
inline double log_pdf_s(double x) { return normal::log_pdf(x); }
inline double mills_s(double x) { return normal::mills(x); }
inline double log1mexp_s(double x) { return normal::log1mexp(x); }

template <int N> Dual<N> sqrt_s(const Dual<N>& x) {
  const double r = std::sqrt(x.v);
  return x.chain(r, 0.5 / r);
}
template <int N> Dual<N> exp_s(const Dual<N>& x) {
  const double e = std::exp(x.v);
  return x.chain(e, e);
}
template <int N> Dual<N> log_s(const Dual<N>& x) { return x.chain(std::log(x.v), 1.0 / x.v); }
template <int N> Dual<N> log_cdf_s(const Dual<N>& x) {
  return x.chain(normal::log_cdf(x.v), normal::mills(x.v));
}
template <int N> Dual<N> log_pdf_s(const Dual<N>& x) { return x.chain(normal::log_pdf(x.v), -x.v); }
template <int N> Dual<N> mills_s(const Dual<N>& x) {
  const double m = normal::mills(x.v);
  return x.chain(m, -m * (m + x.v));
}
template <int N> Dual<N> log1mexp_s(const Dual<N>& x) {
  // d/dx log(1 - e^x) = -1 / (e^{-x} - 1)
  return x.chain(normal::log1mexp(x.v), -1.0 / std::expm1(-x.v));
}

}  // namespace ppesmoc

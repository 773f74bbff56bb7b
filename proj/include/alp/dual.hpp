#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace alp {

// Forward-mode dual number carrying N directional derivatives.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

  static Dual variable(double value, std::size_t index) {
    Dual x(value);
    x.d[index] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double q = v * inv;
    for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    return *this;
  }
  Dual operator-() const {
    Dual r(*this);
    r.v = -v;
    for (auto& x : r.d) x = -x;
    return r;
  }
};

template <std::size_t N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <std::size_t N>
Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <std::size_t N>
Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }

template <std::size_t N>
Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <std::size_t N>
Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <std::size_t N>
Dual<N> operator-(double b, const Dual<N>& a) { return -a + b; }
template <std::size_t N>
Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <std::size_t N>
Dual<N> operator*(double b, Dual<N> a) { return a * b; }
template <std::size_t N>
Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <std::size_t N>
Dual<N> operator/(double b, const Dual<N>& a) { return Dual<N>(b) / a; }

template <std::size_t N>
bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <std::size_t N>
bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <std::size_t N>
bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <std::size_t N>
bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <std::size_t N>
bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <std::size_t N>
bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }

namespace detail {
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double fx, double dfx) {
  Dual<N> r(fx);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = dfx * x.d[i];
  return r;
}
}  // namespace detail

template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.v);
  return detail::chain(x, e, e);
}
template <std::size_t N>
Dual<N> expm1(const Dual<N>& x) {
  return detail::chain(x, std::expm1(x.v), std::exp(x.v));
}
template <std::size_t N>
Dual<N> log(const Dual<N>& x) { return detail::chain(x, std::log(x.v), 1.0 / x.v); }
template <std::size_t N>
Dual<N> log1p(const Dual<N>& x) { return detail::chain(x, std::log1p(x.v), 1.0 / (1.0 + x.v)); }
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.v);
  return detail::chain(x, s, 0.5 / s);
}
template <std::size_t N>
Dual<N> abs(const Dual<N>& x) { return x.v < 0 ? -x : x; }
template <std::size_t N>
Dual<N> atan(const Dual<N>& x) { return detail::chain(x, std::atan(x.v), 1.0 / (1.0 + x.v * x.v)); }
template <std::size_t N>
Dual<N> pow(const Dual<N>& x, double p) {
  const double r = std::pow(x.v, p);
  return detail::chain(x, r, p * std::pow(x.v, p - 1.0));
}

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.v; }

}  // namespace alp

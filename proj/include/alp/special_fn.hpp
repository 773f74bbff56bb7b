#pragma once

// Log-gamma, log-beta and the regularized incomplete beta function.
//
// The real-argument routines are templates so that they can be evaluated on
// alp::Dual numbers; calibration differentiates option prices with respect to
// the skew parameters through these functions.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>

#include "alp/dual.hpp"
#include "alp/errors.hpp"

namespace alp {

using Complex = std::complex<double>;

namespace detail {

// Lanczos approximation, g = 7, n = 9.
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;
inline constexpr double kEulerGamma = 0.5772156649015328606;

// zeta(k), k = 2..30
inline constexpr std::array<double, 29> kZeta = {
    1.6449340668482264365, 1.2020569031595942854, 1.0823232337111381915,
    1.0369277551433699263, 1.0173430619844491397, 1.0083492773819228268,
    1.0040773561979443394, 1.0020083928260822144, 1.0009945751278180853,
    1.0004941886041194646, 1.0002460865533080483, 1.0001227133475784891,
    1.0000612481350587048, 1.0000305882363070205, 1.0000152822594086519,
    1.0000076371976378998, 1.0000038172932649998, 1.0000019082127165539,
    1.0000009539620338728, 1.0000004769329867878, 1.0000002384505027277,
    1.0000001192199259653, 1.0000000596081890513, 1.0000000298035035147,
    1.0000000149015548284, 1.0000000074507117898, 1.0000000037253340248,
    1.0000000018626597235, 1.0000000009313274324};

// ln Gamma(1 + eps) by its Taylor series, |eps| <= 0.2.
template <typename T>
T log_gamma_1p_series(const T& eps) {
  T sum(0.0);
  T power = eps * eps;  // eps^k, starting at k = 2
  double sign = 1.0;
  for (std::size_t k = 2; k < 2 + kZeta.size(); ++k) {
    sum += power * (sign * kZeta[k - 2] / static_cast<double>(k));
    power *= eps;
    sign = -sign;
  }
  return sum - eps * kEulerGamma;
}

template <typename T>
T log_gamma_lanczos(const T& z) {
  T series(kLanczos[0]);
  for (std::size_t k = 1; k < kLanczos.size(); ++k) {
    series += kLanczos[k] / (z + (static_cast<double>(k) - 1.0));
  }
  const T t = z + (kLanczosG - 0.5);
  using std::log;
  return kHalfLog2Pi + (z - 0.5) * log(t) - t + log(series);
}

template <typename T>
T log_gamma_positive(const T& z) {
  using std::log;
  using std::log1p;
  const double zv = value_of(z);
  if (std::fabs(zv - 1.0) <= 0.2) return log_gamma_1p_series(z - 1.0);
  if (std::fabs(zv - 2.0) <= 0.2) return log_gamma_1p_series(z - 2.0) + log1p(z - 2.0);
  if (zv < 0.5) {
    // Gamma(z) = Gamma(z + 1) / z keeps the approximation in its accurate range.
    return log_gamma_positive(z + 1.0) - log(z);
  }
  return log_gamma_lanczos(z);
}

template <typename T>
bool cf_converged(const T& del) {
  if constexpr (std::is_same_v<T, double>) {
    return std::fabs(del - 1.0) < 1e-16;
  } else {
    if (std::fabs(del.v - 1.0) >= 1e-16) return false;
    for (double g : del.d) {
      if (std::fabs(g) >= 1e-15) return false;
    }
    return true;
  }
}

// Continued fraction for I_x(a, b), modified Lentz.
template <typename T>
T inc_beta_cf(const T& a, const T& b, const T& x) {
  constexpr double kTiny = 1e-300;
  constexpr int kMaxIter = 20000;
  using std::fabs;
  const T qab = a + b;
  const T qap = a + 1.0;
  const T qam = a - 1.0;
  T c(1.0);
  T d = 1.0 - qab * x / qap;
  if (std::fabs(value_of(d)) < kTiny) d = T(kTiny);
  d = 1.0 / d;
  T h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double md = static_cast<double>(m);
    const T m2 = T(2.0 * md);
    T aa = md * (b - md) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(value_of(d)) < kTiny) d = T(kTiny);
    c = 1.0 + aa / c;
    if (std::fabs(value_of(c)) < kTiny) c = T(kTiny);
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(value_of(d)) < kTiny) d = T(kTiny);
    c = 1.0 + aa / c;
    if (std::fabs(value_of(c)) < kTiny) c = T(kTiny);
    d = 1.0 / d;
    const T del = d * c;
    h *= del;
    if (cf_converged(del)) return h;
  }
  throw NumericalError("reg_inc_beta: continued fraction did not converge for a=" +
                       std::to_string(value_of(a)) + " b=" + std::to_string(value_of(b)) +
                       " x=" + std::to_string(value_of(x)));
}

}  // namespace detail

/// ln Gamma(z) for real z > 0.
template <typename T>
T log_gamma(const T& z) {
  if (!(value_of(z) > 0.0) || !std::isfinite(value_of(z))) {
    throw DomainError("log_gamma: argument must be finite and > 0, got " +
                      std::to_string(value_of(z)));
  }
  return detail::log_gamma_positive(z);
}

/// Principal-branch ln Gamma(z) for Re(z) > 0.
Complex log_gamma_complex(Complex z);

template <typename T>
T log_beta(const T& a, const T& b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

Complex log_beta_complex(Complex a, Complex b);

/// I_x(a, b) given both x and y = 1 - x (the caller supplies whichever it can
/// compute without cancellation), their logarithms, and ln B(a, b).
template <typename T>
T reg_inc_beta_split(const T& x, const T& y, const T& log_x, const T& log_y, const T& a,
                     const T& b, const T& log_beta_ab) {
  using std::exp;
  const double xv = value_of(x);
  if (xv <= 0.0) return T(0.0);
  if (value_of(y) <= 0.0) return T(1.0);
  const T front = exp(a * log_x + b * log_y - log_beta_ab);
  const double av = value_of(a);
  const double bv = value_of(b);
  if (xv < (av + 1.0) / (av + bv + 2.0)) {
    return front * detail::inc_beta_cf(a, b, x) / a;
  }
  return 1.0 - front * detail::inc_beta_cf(b, a, y) / b;
}

/// Regularized incomplete beta I_x(a, b) for x in [0, 1], a, b > 0.
template <typename T>
T reg_inc_beta(const T& x, const T& a, const T& b) {
  using std::log;
  using std::log1p;
  const double xv = value_of(x);
  if (!(xv >= 0.0 && xv <= 1.0)) {
    throw DomainError("reg_inc_beta: x must lie in [0, 1], got " + std::to_string(xv));
  }
  if (!(value_of(a) > 0.0) || !(value_of(b) > 0.0)) {
    throw DomainError("reg_inc_beta: a and b must be > 0");
  }
  if (xv == 0.0) return T(0.0);
  if (xv == 1.0) return T(1.0);
  const T y = 1.0 - x;
  return reg_inc_beta_split(x, y, log(x), log1p(-x), a, b, log_beta(a, b));
}

}  // namespace alp

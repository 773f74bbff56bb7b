#pragma once

// Generalized logistic (type IV) distribution GL(mu, sigma, alpha, beta).

#include <cmath>
#include <string>
#include <vector>

#include "alp/special_fn.hpp"

namespace alp {

struct GLParams {
  double mu = 0.0;     // location, log-return units
  double sigma = 1.0;  // scale
  double alpha = 1.0;  // left skew
  double beta = 1.0;   // right skew

  /// Throws DomainError unless sigma, alpha, beta > 0.
  void validate() const;
};

double logistic_pdf(double x, double mu, double sigma);
double logistic_cdf(double x, double mu, double sigma);

double gl_pdf(double x, const GLParams& p);
double gl_cdf(double x, const GLParams& p);

namespace detail {

// Phi(x; a, b) with ln B(a, b) supplied by the caller. Both tails of the
// logistic transform are formed without cancellation.
template <typename T>
T std_gl_cdf_lb(const T& x, const T& a, const T& b, const T& log_beta_ab) {
  using std::exp;
  using std::log1p;
  const double xv = value_of(x);
  if (xv >= 0.0) {
    const T e = exp(-x);
    const T l = log1p(e);
    return reg_inc_beta_split(1.0 / (1.0 + e), e / (1.0 + e), -l, -x - l, a, b, log_beta_ab);
  }
  const T e = exp(x);
  const T l = log1p(e);
  return reg_inc_beta_split(e / (1.0 + e), 1.0 / (1.0 + e), x - l, -l, a, b, log_beta_ab);
}

}  // namespace detail

/// Standard GL CDF Phi(x; alpha, beta) = F^GL(x; 0, 1, alpha, beta).
template <typename T>
T std_gl_cdf(const T& x, const T& alpha, const T& beta) {
  if (!(value_of(alpha) > 0.0) || !(value_of(beta) > 0.0)) {
    throw DomainError("std_gl_cdf: alpha and beta must be > 0");
  }
  if (std::isnan(value_of(x))) throw DomainError("std_gl_cdf: x is NaN");
  return detail::std_gl_cdf_lb(x, alpha, beta, log_beta(alpha, beta));
}

/// Characteristic function E[exp(i z X)] for real z.
Complex gl_charfn(double z, const GLParams& p);

/// Analytic continuation of the characteristic function to complex w inside
/// the strip Re(alpha + i sigma w) > 0, Re(beta - i sigma w) > 0.
Complex gl_charfn_analytic(Complex w, const GLParams& p);

/// Levy density v(x) of GL(., sigma, alpha, beta), x != 0.
double levy_density(double x, double sigma, double alpha, double beta);

/// Drift a of the Levy triplet (truncation function 1_{|x|<1}).
double levy_drift(double mu, double sigma, double alpha, double beta);

/// i z a + int (e^{izx} - 1 - izx 1_{|x|<1}) v(x) dx, evaluated numerically.
Complex cumulant_via_triplet(double z, const GLParams& p);

struct SelfDecomposabilityPoint {
  double x = 0.0;
  double derivative = 0.0;  // d/dx (|x| v(x)), central difference
  bool ok = false;          // > 0 for x < 0, < 0 for x > 0
};

struct SelfDecomposabilityReport {
  std::vector<SelfDecomposabilityPoint> points;
  bool pass = true;
};

SelfDecomposabilityReport selfdecomposability_check(double sigma, double alpha, double beta,
                                                    const std::vector<double>& grid);

}  // namespace alp

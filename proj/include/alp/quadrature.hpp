#pragma once

#include <functional>

namespace alp {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
};

/// Adaptive Gauss-Kronrod (61-point) integral of f over [a, b]. Either bound
/// may be infinite. Throws NumericalError when the error estimate exceeds
/// max(abs_tol, rel_tol * |value|) after the maximum subdivision depth.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-12, double rel_tol = 1e-12);

}  // namespace alp

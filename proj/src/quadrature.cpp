#include "alp/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "alp/errors.hpp"

namespace alp {

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, double rel_tol) {
  constexpr unsigned kMaxDepth = 15;
  QuadratureResult out;
  if (a == b) return out;
  double l1 = 0.0;
  // Boost stops once error <= rel_tol * L1; the absolute bound is checked here.
  out.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, kMaxDepth, rel_tol, &out.error, &l1);
  // The estimate is |K61 - G30|, which overstates the Kronrod error for smooth
  // integrands; allow one decade of slack before declaring failure.
  const double bound = std::max(abs_tol, rel_tol * std::fabs(out.value));
  if (!std::isfinite(out.value) || out.error > 10.0 * bound + 1e-300) {
    std::ostringstream msg;
    msg << "integrate: no convergence on [" << a << ", " << b << "], achieved error "
        << out.error << " > requested " << bound;
    throw NumericalError(msg.str());
  }
  return out;
}

}  // namespace alp

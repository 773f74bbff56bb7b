#include "alp/special_fn.hpp"

namespace alp {

Complex log_gamma_complex(Complex z) {
  if (!(z.real() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError("log_gamma_complex: requires finite z with Re(z) > 0");
  }
  if (z.imag() == 0.0) return {log_gamma(z.real()), 0.0};
  Complex shift{0.0, 0.0};
  while (z.real() < 0.5) {
    shift -= std::log(z);
    z += 1.0;
  }
  return shift + detail::log_gamma_lanczos(z);
}

Complex log_beta_complex(Complex a, Complex b) {
  return log_gamma_complex(a) + log_gamma_complex(b) - log_gamma_complex(a + b);
}

}  // namespace alp

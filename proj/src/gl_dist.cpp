#include "alp/gl_dist.hpp"

#include <algorithm>
#include <sstream>

#include "alp/quadrature.hpp"

namespace alp {

namespace {

void require_positive(double v, const char* what, const char* fn) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << fn << ": " << what << " must be finite and > 0, got " << v;
    throw DomainError(msg.str());
  }
}

// log(1 + e^t) without overflow.
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t))); }

}  // namespace

void GLParams::validate() const {
  if (!std::isfinite(mu)) throw DomainError("GLParams: mu must be finite");
  require_positive(sigma, "sigma", "GLParams");
  require_positive(alpha, "alpha", "GLParams");
  require_positive(beta, "beta", "GLParams");
}

double logistic_pdf(double x, double mu, double sigma) {
  require_positive(sigma, "sigma", "logistic_pdf");
  const double z = std::fabs((x - mu) / sigma);
  // symmetric in z; e^{-z} / (1 + e^{-z})^2 never overflows for z >= 0
  const double e = std::exp(-z);
  return e / (sigma * (1.0 + e) * (1.0 + e));
}

double logistic_cdf(double x, double mu, double sigma) {
  require_positive(sigma, "sigma", "logistic_cdf");
  const double z = (x - mu) / sigma;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double gl_pdf(double x, const GLParams& p) {
  p.validate();
  const double z = (x - p.mu) / p.sigma;
  const double log_f = -std::log(p.sigma) - log_beta(p.alpha, p.beta) - p.beta * z -
                       (p.alpha + p.beta) * softplus(-z);
  return std::exp(log_f);
}

double gl_cdf(double x, const GLParams& p) {
  p.validate();
  return std_gl_cdf((x - p.mu) / p.sigma, p.alpha, p.beta);
}

Complex gl_charfn(double z, const GLParams& p) {
  p.validate();
  return gl_charfn_analytic(Complex(z, 0.0), p);
}

Complex gl_charfn_analytic(Complex w, const GLParams& p) {
  p.validate();
  const Complex i(0.0, 1.0);
  const Complex a = p.alpha + i * p.sigma * w;
  const Complex b = p.beta - i * p.sigma * w;
  if (!(a.real() > 0.0) || !(b.real() > 0.0)) {
    std::ostringstream msg;
    msg << "gl_charfn_analytic: w = (" << w.real() << ", " << w.imag()
        << ") leaves the strip of analyticity (needs Re(alpha + i sigma w) > 0 and "
           "Re(beta - i sigma w) > 0; at w = -i this is sigma < beta)";
    throw DomainError(msg.str());
  }
  return std::exp(log_beta_complex(a, b) - log_beta(p.alpha, p.beta) + i * p.mu * w);
}

double levy_density(double x, double sigma, double alpha, double beta) {
  require_positive(sigma, "sigma", "levy_density");
  require_positive(alpha, "alpha", "levy_density");
  require_positive(beta, "beta", "levy_density");
  if (x == 0.0) throw DomainError("levy_density: undefined at x = 0");
  const double ax = std::fabs(x);
  const double rate = x > 0.0 ? beta : alpha;
  return std::exp(-rate * ax / sigma) / (ax * -std::expm1(-ax / sigma));
}

double levy_drift(double mu, double sigma, double alpha, double beta) {
  require_positive(sigma, "sigma", "levy_drift");
  require_positive(alpha, "alpha", "levy_drift");
  require_positive(beta, "beta", "levy_drift");
  if (alpha == beta) return mu;
  auto integrand = [&](double u) {
    if (u < 1e-8) return alpha - beta;
    // (e^{-beta u} - e^{-alpha u}) / (1 - e^{-u})
    return -std::exp(-beta * u) * std::expm1((beta - alpha) * u) / -std::expm1(-u);
  };
  return sigma * integrate(integrand, 0.0, 1.0 / sigma, 1e-13, 1e-13).value + mu;
}

Complex cumulant_via_triplet(double z, const GLParams& p) {
  p.validate();
  if (z == 0.0) return {0.0, 0.0};
  const double sigma = p.sigma;
  const double a = levy_drift(p.mu, sigma, p.alpha, p.beta);

  // Fold x < 0 onto x > 0. With v+ = v(x), v- = v(-x):
  //   Re: (cos zx - 1)(v+ + v-)
  //   Im: (sin zx - zx 1_{x<1})(v+ - v-)
  // Both are bounded at 0 because x^2 v(+-x) -> sigma.
  auto jumps = [&](double x) {
    const double denom = x * -std::expm1(-x / sigma);
    const double vp = std::exp(-p.beta * x / sigma) / denom;
    const double vm = std::exp(-p.alpha * x / sigma) / denom;
    return std::pair<double, double>{vp, vm};
  };
  auto re = [&](double x) {
    const double s = std::sin(0.5 * z * x);
    const auto [vp, vm] = jumps(x);
    return -2.0 * s * s * (vp + vm);
  };
  auto im_inner = [&](double x) {
    // v+ - v- = e^{-alpha x/sigma}(e^{(alpha-beta)x/sigma} - 1) / denom, no cancellation
    const double diff = std::exp(-p.alpha * x / sigma) *
                        std::expm1((p.alpha - p.beta) * x / sigma) /
                        (x * -std::expm1(-x / sigma));
    return (std::sin(z * x) - z * x) * diff;
  };
  auto im_outer = [&](double x) {
    const auto [vp, vm] = jumps(x);
    return std::sin(z * x) * (vp - vm);
  };

  const double cutoff = 50.0 * sigma * std::max({1.0, 1.0 / p.alpha, 1.0 / p.beta});
  const double delta = 1e-4 * sigma;
  constexpr double kTol = 1e-11;

  double re_sum = 0.0;
  double im_sum = 0.0;
  std::vector<double> breaks{0.0, delta};
  if (1.0 < cutoff) {
    breaks.push_back(1.0);
  }
  breaks.push_back(cutoff);
  std::sort(breaks.begin(), breaks.end());
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k];
    const double hi = breaks[k + 1];
    if (hi <= lo) continue;
    re_sum += integrate(re, lo, hi, kTol, 1e-12).value;
    if (hi <= 1.0) {
      im_sum += integrate(im_inner, lo, hi, kTol, 1e-12).value;
    } else {
      im_sum += integrate(im_outer, lo, hi, kTol, 1e-12).value;
    }
  }
  // Tail beyond the cutoff: |integrand| <= 2 (v+ + v-) and v decays like
  // e^{-min(alpha,beta) x / sigma} / x.
  const double rate = std::min(p.alpha, p.beta) / sigma;
  const double tail_bound = 4.0 * std::exp(-rate * cutoff) / (cutoff * rate);
  if (tail_bound > 1e-8) {
    std::ostringstream msg;
    msg << "cumulant_via_triplet: truncated tail bound " << tail_bound << " exceeds 1e-8";
    throw NumericalError(msg.str());
  }
  return {re_sum, z * a + im_sum};
}

SelfDecomposabilityReport selfdecomposability_check(double sigma, double alpha, double beta,
                                                    const std::vector<double>& grid) {
  SelfDecomposabilityReport report;
  auto k = [&](double x) { return std::fabs(x) * levy_density(x, sigma, alpha, beta); };
  for (double x : grid) {
    if (x == 0.0) throw DomainError("selfdecomposability_check: grid must exclude 0");
    const double h = 1e-6 * std::max(1.0, std::fabs(x));
    SelfDecomposabilityPoint pt;
    pt.x = x;
    pt.derivative = (k(x + h) - k(x - h)) / (2.0 * h);
    pt.ok = x < 0.0 ? pt.derivative > 0.0 : pt.derivative < 0.0;
    report.pass = report.pass && pt.ok;
    report.points.push_back(pt);
  }
  return report;
}

}  // namespace alp

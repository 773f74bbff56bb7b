#include <cmath>
#include <random>

#include "alp/gl_dist.hpp"
#include "alp/pricing.hpp"
#include "alp/quadrature.hpp"
#include "doctest.h"
#include "frozen.hpp"

using namespace alp;

namespace {

const GLParams kSets[] = {
    {0.0, 0.15, 0.8260869565217391, 1.0195652173913044},
    {0.0, 0.2, 0.8, 0.7},
    {0.1, 1.0, 2.5, 0.6},
    {-0.3, 0.05, 1.3, 3.0},
};

Complex fourier_quadrature(double z, const GLParams& p) {
  auto re = [&](double x) { return std::cos(z * x) * gl_pdf(x, p); };
  auto im = [&](double x) { return std::sin(z * x) * gl_pdf(x, p); };
  const double w = 60.0 * p.sigma * std::max({1.0, 1.0 / p.alpha, 1.0 / p.beta});
  double r = 0.0, i = 0.0;
  for (double lo = p.mu - w; lo < p.mu + w; lo += p.sigma) {
    r += integrate(re, lo, lo + p.sigma, 1e-15, 1e-13).value;
    i += integrate(im, lo, lo + p.sigma, 1e-15, 1e-13).value;
  }
  return {r, i};
}

}  // namespace

TEST_CASE("logistic density and distribution") {
  CHECK(logistic_cdf(0, 0, 1) == 0.5);
  CHECK(logistic_pdf(0, 0, 1) == 0.25);
  CHECK(std::fabs(logistic_cdf(2, 1, 0.5) - frozen::kLogisticCdf2_1_05) < 1e-15);
  CHECK(logistic_cdf(-800, 0, 1) == 0.0);
  CHECK(logistic_cdf(800, 0, 1) == 1.0);
  CHECK(logistic_pdf(800, 0, 1) == 0.0);
  CHECK_THROWS_AS(logistic_pdf(0, 0, 0), DomainError);
}

TEST_CASE("GL with unit skews reduces to the logistic") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng);
    const GLParams p{0.3, 0.7, 1.0, 1.0};
    CHECK(std::fabs(gl_cdf(x, p) - logistic_cdf(x, 0.3, 0.7)) < 1e-14);
    CHECK(std::fabs(gl_pdf(x, p) - logistic_pdf(x, 0.3, 0.7)) < 1e-14);
  }
}

TEST_CASE("gl_cdf and gl_pdf") {
  CHECK(std::fabs(gl_cdf(0, {0, 1, 0.8, 0.7}) - reg_inc_beta(0.5, 0.8, 0.7)) < 1e-15);
  CHECK(std::fabs(std_gl_cdf(1.2, 0.8, 2.7) - frozen::kStdGlCdf12_08_27) < 1e-13);
  CHECK(std::fabs(std_gl_cdf(0.0, 1.0, 1.0) - 0.5) < 1e-15);
  for (const auto& p : kSets) {
    double mass = 0.0;
    for (double lo = p.mu - 40 * p.sigma; lo < p.mu + 40 * p.sigma - 1e-12; lo += p.sigma) {
      mass += integrate([&](double x) { return gl_pdf(x, p); }, lo, lo + p.sigma, 1e-15, 1e-13).value;
    }
    // 40 sigma leaves e^{-40 min(alpha, beta)} outside
    CHECK(std::fabs(mass - 1.0) < 1e-9 + std::exp(-40.0 * std::min(p.alpha, p.beta)));
    // cdf is the integral of the pdf
    for (double x : {-1.0, -0.1, 0.0, 0.25, 1.5}) {
      const double q = integrate([&](double y) { return gl_pdf(y, p); }, p.mu - 3 * p.sigma,
                                 p.mu + x * p.sigma, 1e-15, 1e-13).value;
      const double want = gl_cdf(p.mu + x * p.sigma, p) - gl_cdf(p.mu - 3 * p.sigma, p);
      CHECK(std::fabs(q - want) < 1e-12);
    }
  }
  CHECK_THROWS_AS(gl_pdf(0, {0, 1, 0, 1}), DomainError);
  CHECK_THROWS_AS(gl_cdf(0, {0, -1, 1, 1}), DomainError);
  CHECK_THROWS_AS(std_gl_cdf(std::nan(""), 1.0, 1.0), DomainError);
}

TEST_CASE("gl density is non-negative and the cdf non-decreasing") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> la(-1.3, 1.0), ux(-60, 60);
  for (int i = 0; i < 40; ++i) {
    const GLParams p{0.0, std::pow(10.0, la(rng)), std::pow(10.0, la(rng)), std::pow(10.0, la(rng))};
    double prev = 0.0;
    for (int k = -300; k <= 300; ++k) {
      const double x = k * 0.2;
      const double f = gl_pdf(x, p);
      const double c = gl_cdf(x, p);
      CHECK(f >= 0.0);
      CHECK(std::isfinite(c));
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("Phi reflection identity") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> la(-1.3, 1.3), ux(-40, 40);
  for (int i = 0; i < 500; ++i) {
    const double a = std::pow(10.0, la(rng)), b = std::pow(10.0, la(rng)), x = ux(rng);
    CHECK(std::fabs(std_gl_cdf(x, a, b) + std_gl_cdf(-x, b, a) - 1.0) <= 1e-12);
  }
}

TEST_CASE("characteristic function") {
  for (const auto& p : kSets) {
    CHECK(std::abs(gl_charfn(0.0, p) - Complex(1.0, 0.0)) < 1e-15);
    for (double z : {0.3, 1.0, 4.0}) {
      CHECK(std::abs(gl_charfn(-z, p) - std::conj(gl_charfn(z, p))) < 1e-14);
    }
    for (double z : {0.5, 1.0, 2.0}) {
      CHECK(std::abs(gl_charfn(z, p) - fourier_quadrature(z, p)) < 1e-6);
    }
  }
  const Complex c = gl_charfn(1.0, {0, 0.2, 0.8, 0.7});
  CHECK(std::fabs(c.real() - frozen::kCharfn1Re) < 1e-13);
  CHECK(std::fabs(c.imag() - frozen::kCharfn1Im) < 1e-13);
}

TEST_CASE("analytic continuation") {
  const GLParams p{0, 0.2, 0.8, 0.9};
  CHECK(std::abs(gl_charfn_analytic({0, 0}, p) - Complex(1, 0)) < 1e-15);
  const Complex mgf = gl_charfn_analytic({0, -1}, p);
  CHECK(std::fabs(mgf.real() - std::exp(log_beta(1.0, 0.7) - log_beta(0.8, 0.9))) < 1e-13);
  CHECK(std::fabs(mgf.real() - frozen::kMgfQuadrature) < 1e-13);
  CHECK(std::fabs(mgf.imag()) < 1e-15);
  for (const auto& q : kSets) {
    if (!(q.sigma < q.beta)) continue;
    GLParams m = q;
    m.mu = -martingale_drift(q.sigma, q.alpha, q.beta);
    CHECK(std::abs(gl_charfn_analytic({0, -1}, m) - Complex(1, 0)) <= 1e-12);
    // the real axis agrees with gl_charfn
    CHECK(std::abs(gl_charfn_analytic({0.7, 0}, m) - gl_charfn(0.7, m)) < 1e-15);
  }
  CHECK_THROWS_AS(gl_charfn_analytic({0, -5}, p), DomainError);
}

TEST_CASE("Levy density") {
  CHECK(std::fabs(levy_density(1.0, 1.0, 0.8, 0.7) - std::exp(-0.7) / (1.0 - std::exp(-1.0))) < 1e-15);
  for (double s : {0.1, 1.0, 3.0}) {
    CHECK(std::fabs(1e-12 * levy_density(1e-6, s, 0.8, 0.7) - s) < 1e-5 * s);
    CHECK(std::fabs(1e-12 * levy_density(-1e-6, s, 0.8, 0.7) - s) < 1e-5 * s);
  }
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const double x = ux(rng);
    if (x != 0.0) CHECK(levy_density(x, 0.3, 1.2, 0.9) > 0.0);
  }
  CHECK_THROWS_AS(levy_density(0.0, 1, 1, 1), DomainError);
}

TEST_CASE("Levy drift") {
  CHECK(levy_drift(0.0, 0.3, 0.9, 0.9) == 0.0);
  CHECK(std::fabs(levy_drift(0.0, 0.15, 0.8, 0.7) - frozen::kLevyDrift015_08_07) < 1e-12);
  for (double mu : {-0.5, 0.2, 3.0}) {
    CHECK(std::fabs(levy_drift(mu, 0.4, 1.3, 0.6) - levy_drift(0.0, 0.4, 1.3, 0.6) - mu) < 1e-14);
  }
}

TEST_CASE("cumulant via the Levy triplet matches log phi") {
  CHECK(std::abs(cumulant_via_triplet(0.0, kSets[0])) == 0.0);
  const Complex sym = cumulant_via_triplet(0.9, {0.0, 0.4, 1.1, 1.1});
  CHECK(std::fabs(sym.imag()) < 1e-12);
  for (const auto& p : kSets) {
    for (double z : {0.3, 0.7, 1.5}) {
      CHECK(std::abs(cumulant_via_triplet(z, p) - std::log(gl_charfn(z, p))) <= 1e-5);
    }
  }
  const GLParams p{0, 0.15, 0.8, 0.7};
  CHECK(std::abs(cumulant_via_triplet(0.7, p) - std::log(gl_charfn(0.7, p))) <= 1e-6);
}

TEST_CASE("self-decomposability") {
  const std::vector<double> grid{-5, -1, -0.1, 0.1, 1, 5};
  for (double s : {0.05, 0.5, 2.0})
    for (double a : {0.3, 1.0, 4.0})
      for (double b : {0.3, 1.0, 4.0}) CHECK(selfdecomposability_check(s, a, b, grid).pass);
  const auto r = selfdecomposability_check(1.0, 0.8, 0.7, {0.5});
  CHECK(r.points[0].derivative < 0.0);
  // k(x) = e^{-0.7 x} / (1 - e^{-x}); k'(x) at 0.5
  const double e = std::exp(-0.5), k = std::exp(-0.35) / (1 - e);
  const double dk = -0.7 * k - k * e / (1 - e);
  CHECK(std::fabs(r.points[0].derivative - dk) < 1e-6);
  CHECK_THROWS_AS(selfdecomposability_check(1, 1, 1, {0.0}), DomainError);
}

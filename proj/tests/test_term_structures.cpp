#include <cmath>
#include <random>

#include "alp/surfaces.hpp"
#include "alp/term_structures.hpp"
#include "doctest.h"

using namespace alp;

TEST_CASE("parametric forms at tau = 1") {
  const TermPoint p = eval_parametric(ParametricTerm::eq24(), 1.0);
  CHECK(std::fabs(p.sigma - 0.15) < 1e-15);
  CHECK(std::fabs(p.alpha - (1.0 + (0.8 - 1.0) / 1.15)) < 1e-15);
  CHECK(std::fabs(p.alpha - 0.8260869565217391) < 1e-15);
  CHECK(std::fabs(p.beta - 1.0195652173913044) < 1e-15);
}

TEST_CASE("parametric identities") {
  ParametricTerm simple = ParametricTerm::eq24();
  simple.kinds = {FormKind::kSimple, FormKind::kSimple, FormKind::kSimple};
  for (double tau : {0.01, 0.3, 1.0, 2.0, 7.0}) {
    const TermPoint p = eval_parametric(simple, tau);
    CHECK(std::fabs(p.beta - p.sigma - simple.beta0) < 1e-15);
    CHECK(p.alpha == simple.alpha0);
    CHECK(std::fabs(p.sigma - 0.15 * std::pow(tau, 0.45)) < 1e-15);
  }
  ParametricTerm soph = ParametricTerm::eq24();
  soph.kinds.sigma = FormKind::kSophisticated;
  for (double tau : {0.01, 0.5, 2.0}) {
    const double want = std::atan(0.15 * M_PI / 2 * std::pow(tau, 0.45)) /
                        std::atan(M_PI / 2 * std::pow(tau, -0.5) / 1.0);
    CHECK(std::fabs(eval_parametric(soph, tau).sigma - want) < 1e-15);
  }
}

TEST_CASE("parametric used set and validation") {
  ParametricTerm p = ParametricTerm::eq24();
  auto u = p.used();
  CHECK(u[kSigma0]);
  CHECK(u[kH0]);
  CHECK(!u[kSigma1]);
  CHECK(!u[kH1]);
  CHECK(u[kAlpha1]);
  p.kinds.sigma = FormKind::kSophisticated;
  u = p.used();
  CHECK(u[kSigma1]);
  CHECK(u[kH1]);
  p.kinds = {FormKind::kSimple, FormKind::kSimple, FormKind::kSimple};
  u = p.used();
  CHECK(!u[kAlpha1]);
  CHECK(!u[kBeta1]);

  ParametricTerm bad = ParametricTerm::eq24();
  bad.sigma0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = ParametricTerm::eq24();
  bad.h0 = 1.2;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = ParametricTerm::eq24();
  bad.beta1 = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(eval_parametric(ParametricTerm::eq24(), 0.0), DomainError);
}

TEST_CASE("slice-wise interpolation") {
  SlicewiseTerm s{{1.0, 2.0}, {{0.1, 1.0, 1.5}, {0.2, 1.2, 1.4}}};
  const TermPoint mid = eval_slicewise(s, 1.5);
  CHECK(std::fabs(mid.sigma - 0.15) < 1e-15);
  CHECK(eval_slicewise(s, 1.0) == s.knots[0]);
  CHECK(eval_slicewise(s, 2.0) == s.knots[1]);
  bool extra = false;
  CHECK(eval_slicewise(s, 5.0, &extra) == s.knots[1]);
  CHECK(extra);
  eval_slicewise(s, 1.2, &extra);
  CHECK(!extra);

  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SlicewiseTerm r;
  double tau = 0.1;
  for (int i = 0; i < 12; ++i) {
    tau += 0.05 + u(rng);
    const double sig = 0.05 + u(rng);
    r.tenors.push_back(tau);
    r.knots.push_back({sig, 0.2 + u(rng), sig + 0.1 + u(rng)});
  }
  r.validate();
  for (std::size_t i = 0; i < r.tenors.size(); ++i) CHECK(eval_slicewise(r, r.tenors[i]) == r.knots[i]);
  for (int k = 0; k < 200; ++k) {
    const double x = r.tenors.front() + u(rng) * (r.tenors.back() - r.tenors.front());
    const std::size_t hi = std::upper_bound(r.tenors.begin(), r.tenors.end(), x) - r.tenors.begin();
    if (hi == 0 || hi >= r.tenors.size()) continue;
    const double w = (x - r.tenors[hi - 1]) / (r.tenors[hi] - r.tenors[hi - 1]);
    const TermPoint a = r.knots[hi - 1], b = r.knots[hi], got = eval_slicewise(r, x);
    CHECK(std::fabs(got.sigma - ((1 - w) * a.sigma + w * b.sigma)) < 1e-14);
    CHECK(std::fabs(got.alpha - ((1 - w) * a.alpha + w * b.alpha)) < 1e-14);
    CHECK(std::fabs(got.beta - ((1 - w) * a.beta + w * b.beta)) < 1e-14);
    CHECK(got.sigma >= std::min(a.sigma, b.sigma));
    CHECK(got.sigma <= std::max(a.sigma, b.sigma));
  }

  CHECK_THROWS_AS((SlicewiseTerm{{1.0}, {{0.1, 1, 1}}}.validate()), InvalidArgument);
  CHECK_THROWS_AS((SlicewiseTerm{{2.0, 1.0}, {{0.1, 1, 1}, {0.1, 1, 1}}}.validate()), DomainError);
  CHECK_THROWS_AS((SlicewiseTerm{{1.0, 2.0}, {{0.1, 1, 1}, {0.9, 1, 0.5}}}.validate()), InfeasibleError);
}

TEST_CASE("neural term structure") {
  NeuralTerm z = NeuralTerm::create(false, {8, 8}, Activation::kRelu, 0);
  for (double& w : z.net.params()) w = 0.0;
  const TermPoint p = eval_neural(z, 0.0, 0.7);
  CHECK(std::fabs(p.sigma - std::log(2.0)) < 1e-15);
  CHECK(std::fabs(p.alpha - std::log(2.0)) < 1e-15);
  CHECK(std::fabs(p.beta - 2 * std::log(2.0)) < 1e-15);
  const double in[1] = {0.7};
  const auto d = tenor_derivatives(z, in);
  CHECK(d.d_sigma == 0.0);
  CHECK(d.d_alpha == 0.0);
  CHECK(d.d_beta == 0.0);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 1000; ++k) {
    NeuralTerm n = NeuralTerm::create(k % 2 == 1, {8, 8}, Activation::kRelu, k);
    for (double& w : n.net.params()) w *= 1.0 + 30.0 * std::fabs(u(rng));
    const TermPoint q = eval_neural(n, u(rng), 2.0 + 2.0 * u(rng));
    CHECK(q.sigma > 0.0);
    CHECK(q.alpha > 0.0);
    CHECK(q.beta > q.sigma);
  }
  // very negative raw outputs are floored, still strictly feasible
  NeuralTerm neg = NeuralTerm::create(false, {4}, Activation::kRelu, 1);
  for (double& w : neg.net.params()) w = 0.0;
  for (std::size_t o = 0; o < 3; ++o) neg.net.bias(1, o) = -2000.0;
  const TermPoint f = eval_neural(neg, 0.0, 1.0);
  CHECK(f.sigma > 0.0);
  CHECK(f.alpha > 0.0);
  CHECK(f.beta > f.sigma);

  CHECK_THROWS_AS(NeuralTerm::create(false, {0}, Activation::kRelu, 0), InvalidArgument);
  const double two[2] = {0.1, 0.2};
  CHECK_THROWS_AS(eval_neural(z, two), InvalidArgument);
}

TEST_CASE("tenor derivatives") {
  // sigma output linear in tau: softplus is avoided by reading the raw tangent
  NeuralTerm lin = NeuralTerm::create(false, {1}, Activation::kIdentity, 0);
  for (double& w : lin.net.params()) w = 0.0;
  lin.net.weight(0, 0, 0) = 1.0;
  lin.net.weight(1, 0, 0) = 0.37;
  const double in[1] = {1.3};
  const auto d = tenor_derivatives(lin, in);
  const double s = 1.0 / (1.0 + std::exp(-0.37 * 1.3));  // softplus'(0.37 tau)
  CHECK(std::fabs(d.d_sigma - 0.37 * s) < 1e-15);

  for (int k = 0; k < 20; ++k) {
    NeuralTerm n = NeuralTerm::create(k % 2 == 0, {16, 16}, Activation::kTanh, 300 + k);
    const std::vector<double> x = n.dynamic() ? std::vector<double>{0.2, 0.9} : std::vector<double>{0.9};
    const auto t = tenor_derivatives(n, x);
    const double h = 1e-6;
    auto at = [&](double dtau) {
      auto y = x;
      y[n.tenor_index()] += dtau;
      return eval_neural(n, y);
    };
    const TermPoint p = at(h), m = at(-h);
    CHECK(std::fabs(t.d_sigma - (p.sigma - m.sigma) / (2 * h)) < 1e-6);
    CHECK(std::fabs(t.d_alpha - (p.alpha - m.alpha) / (2 * h)) < 1e-6);
    CHECK(std::fabs(t.d_beta - (p.beta - m.beta) / (2 * h)) < 1e-6);
    const TermPoint v = t.value;
    CHECK(std::fabs(t.d_alpha_over_sigma - (t.d_alpha / v.sigma - v.alpha * t.d_sigma / (v.sigma * v.sigma))) < 1e-12);
    CHECK(std::fabs(t.d_beta_over_sigma - (t.d_beta / v.sigma - v.beta * t.d_sigma / (v.sigma * v.sigma))) < 1e-12);
    CHECK(std::fabs(t.d_alpha_over_sigma - (p.alpha / p.sigma - m.alpha / m.sigma) / (2 * h)) < 1e-5);
  }
}

TEST_CASE("feasibility report") {
  const auto grid = linspace(1.0 / 365.25, 2.0, 100);
  const auto eq = feasibility_report(TermStructure{ParametricTerm::eq24()}, grid);
  CHECK(eq.pass);
  for (const auto& c : eq.conditions) CHECK(c.pass);

  TermFunction falling = [](double, double tau) { return TermPoint{1.0 / (1.0 + tau), 1.0, 3.0}; };
  const auto f = feasibility_report(falling, grid);
  CHECK(!f.pass);
  CHECK(!f.condition("ii_sigma_nondecreasing").pass);
  CHECK(f.condition("iv_sigma_below_beta").pass);

  TermFunction identity = [](double, double tau) { return TermPoint{tau, 1.0, 1.0}; };
  const auto tgrid = linspace(0.1, 2.0, 20);
  const auto r = feasibility_report(identity, tgrid);
  CHECK(r.condition("i_alpha_over_sigma").pass);
  CHECK(r.condition("i_beta_over_sigma").pass);
  const auto& iv = r.condition("iv_sigma_below_beta");
  CHECK(!iv.pass);
  for (std::size_t k = 0; k < tgrid.size(); ++k) CHECK(iv.ok[k] == (tgrid[k] < 1.0 - 1e-8));
  CHECK(r.sigma_at_min_tenor.size() == 1);
  CHECK(r.sigma_at_min_tenor[0] == 0.1);

  CHECK_THROWS_AS(feasibility_report(identity, {}), InvalidArgument);
  CHECK_THROWS_AS(feasibility_report(identity, {1.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(r.condition("v"), InvalidArgument);
}

TEST_CASE("term JSON round trip") {
  ParametricTerm p = ParametricTerm::eq24();
  p.kinds.sigma = FormKind::kSophisticated;
  p.sigma1 = 0.7;
  const TermStructure a = p;
  const TermStructure b = term_from_json(nlohmann::json::parse(term_to_json(a).dump()));
  CHECK(std::get<ParametricTerm>(b) == p);

  const SlicewiseTerm s{{0.5, 1.0}, {{0.1, 0.9, 1.2}, {0.12, 0.8, 1.1}}};
  const auto sb = std::get<SlicewiseTerm>(term_from_json(term_to_json(s)));
  CHECK(sb.tenors == s.tenors);
  CHECK(sb.knots == s.knots);

  const NeuralTerm n = NeuralTerm::create(true, {5, 4}, Activation::kTanh, 8);
  CHECK(std::get<NeuralTerm>(term_from_json(nlohmann::json::parse(term_to_json(n).dump()))).net == n.net);

  CHECK_THROWS_AS(term_from_json(nlohmann::json{{"type", "spline"}}), SchemaError);
  CHECK_THROWS_AS(term_from_json(nlohmann::json::object()), SchemaError);
  auto bad = term_to_json(a);
  bad["params"]["H0"] = 2.0;
  CHECK_THROWS_AS(term_from_json(bad), DomainError);
}

TEST_CASE("term samples CSV") {
  const std::string csv = term_samples_csv(ParametricTerm::eq24(), {1.0, 2.0});
  CHECK(csv.rfind("tenor,sigma,alpha,beta\n1,0.15,", 0) == 0);
  const NeuralTerm n = NeuralTerm::create(true, {4}, Activation::kTanh, 1);
  const std::string dyn = term_samples_csv(n, {1.0}, {0.0, 0.5});
  CHECK(dyn.rfind("date_t,tenor,sigma,alpha,beta\n0,1,", 0) == 0);
  CHECK(std::count(dyn.begin(), dyn.end(), '\n') == 3);
}

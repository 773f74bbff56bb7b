#include "alp/term_structures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "alp/errors.hpp"
#include "alp/format.hpp"

namespace alp {

const char* param_name(std::size_t index) {
  static const char* const kNames[kNumParametric] = {"sigma0", "sigma1", "alpha0", "alpha1",
                                                     "beta0",  "beta1",  "H0",     "H1"};
  if (index >= kNumParametric) throw InvalidArgument("param_name: index out of range");
  return kNames[index];
}

ParametricTerm ParametricTerm::eq24() {
  ParametricTerm p;
  p.kinds = {FormKind::kSimple, FormKind::kSophisticated, FormKind::kSophisticated};
  p.sigma0 = 0.15;
  p.h0 = 0.45;
  p.alpha0 = 0.8;
  p.alpha1 = 1.0;
  p.beta0 = 0.7;
  p.beta1 = 2.0;
  return p;
}

std::array<double, kNumParametric> ParametricTerm::coefficients() const {
  return {sigma0, sigma1, alpha0, alpha1, beta0, beta1, h0, h1};
}

void ParametricTerm::set_coefficients(const std::array<double, kNumParametric>& c) {
  sigma0 = c[kSigma0];
  sigma1 = c[kSigma1];
  alpha0 = c[kAlpha0];
  alpha1 = c[kAlpha1];
  beta0 = c[kBeta0];
  beta1 = c[kBeta1];
  h0 = c[kH0];
  h1 = c[kH1];
}

std::array<bool, kNumParametric> ParametricTerm::used() const {
  std::array<bool, kNumParametric> u{};
  u[kSigma0] = true;
  u[kH0] = true;
  if (kinds.sigma == FormKind::kSophisticated) u[kSigma1] = u[kH1] = true;
  u[kAlpha0] = true;
  if (kinds.alpha == FormKind::kSophisticated) u[kAlpha1] = true;
  u[kBeta0] = true;
  if (kinds.beta == FormKind::kSophisticated) u[kBeta1] = true;
  return u;
}

void ParametricTerm::validate() const {
  const auto c = coefficients();
  const auto u = used();
  for (std::size_t i = 0; i < kNumParametric; ++i) {
    if (!std::isfinite(c[i])) {
      throw DomainError(std::string("ParametricTerm: ") + param_name(i) + " must be finite");
    }
  }
  auto positive = [&](std::size_t i) {
    if (u[i] && !(c[i] > 0.0)) {
      throw DomainError(std::string("ParametricTerm: ") + param_name(i) + " must be > 0");
    }
  };
  positive(kSigma0);
  positive(kSigma1);
  positive(kAlpha0);
  positive(kAlpha1);
  positive(kBeta0);
  positive(kBeta1);
  positive(kH1);
  if (!(h0 > 0.0 && h0 <= 1.0)) throw DomainError("ParametricTerm: H0 must lie in (0, 1]");
}

TermPoint eval_parametric(const ParametricTerm& p, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("eval_parametric: tau must be > 0");
  p.validate();
  const auto v = detail::eval_parametric_forms(p.kinds, p.coefficients(), tau);
  TermPoint out{v[0], v[1], v[2]};
  detail::check_pricing_point(out.sigma, out.alpha, out.beta, tau);
  return out;
}

void SlicewiseTerm::validate() const {
  if (tenors.size() != knots.size()) {
    throw InvalidArgument("SlicewiseTerm: tenors and knots differ in length");
  }
  if (tenors.size() < 2) throw InvalidArgument("SlicewiseTerm: at least 2 knots are required");
  for (std::size_t i = 0; i < tenors.size(); ++i) {
    if (!(tenors[i] > 0.0)) throw DomainError("SlicewiseTerm: knot tenors must be > 0");
    if (i > 0 && !(tenors[i] > tenors[i - 1])) {
      throw DomainError("SlicewiseTerm: knot tenors must be strictly increasing");
    }
    detail::check_pricing_point(knots[i].sigma, knots[i].alpha, knots[i].beta, tenors[i]);
  }
}

TermPoint eval_slicewise(const SlicewiseTerm& s, double tau, bool* extrapolated) {
  if (s.tenors.size() < 2 || s.tenors.size() != s.knots.size()) {
    throw InvalidArgument("eval_slicewise: at least 2 knots are required");
  }
  if (extrapolated) *extrapolated = false;
  if (tau <= s.tenors.front()) {
    if (extrapolated && tau < s.tenors.front()) *extrapolated = true;
    return s.knots.front();
  }
  if (tau >= s.tenors.back()) {
    if (extrapolated && tau > s.tenors.back()) *extrapolated = true;
    return s.knots.back();
  }
  const auto it = std::upper_bound(s.tenors.begin(), s.tenors.end(), tau);
  const std::size_t hi = static_cast<std::size_t>(it - s.tenors.begin());
  const std::size_t lo = hi - 1;
  if (s.tenors[lo] == tau) return s.knots[lo];
  const double w = (tau - s.tenors[lo]) / (s.tenors[hi] - s.tenors[lo]);
  const TermPoint& a = s.knots[lo];
  const TermPoint& b = s.knots[hi];
  auto lerp = [w](double x, double y) { return x + w * (y - x); };
  return {lerp(a.sigma, b.sigma), lerp(a.alpha, b.alpha), lerp(a.beta, b.beta)};
}

void NeuralTerm::validate() const {
  const auto& dims = net.layer_dims();
  if (dims.size() < 2) throw InvalidArgument("NeuralTerm: network has no layers");
  if (dims.front() != 1 && dims.front() != 2) {
    throw InvalidArgument("NeuralTerm: input dimension must be 1 (tau) or 2 (t, tau)");
  }
  if (dims.back() != 3) throw InvalidArgument("NeuralTerm: output dimension must be 3");
  if (net.output_transform() != Activation::kSoftplus) {
    throw InvalidArgument("NeuralTerm: output transform must be softplus");
  }
  for (double w : net.params()) {
    if (!std::isfinite(w)) throw NumericalError("NeuralTerm: non-finite weight");
  }
}

NeuralTerm NeuralTerm::create(bool dynamic, const std::vector<std::size_t>& hidden,
                              Activation activation, std::uint64_t seed) {
  std::vector<std::size_t> dims;
  dims.push_back(dynamic ? 2 : 1);
  for (std::size_t h : hidden) {
    if (h == 0) throw InvalidArgument("NeuralTerm: hidden widths must be positive");
    dims.push_back(h);
  }
  dims.push_back(3);
  return NeuralTerm{MLP(std::move(dims), activation, Activation::kSoftplus, seed)};
}

namespace {

void check_input(const NeuralTerm& n, std::span<const double> input) {
  if (input.size() != n.net.input_dim()) {
    throw InvalidArgument("eval_neural: input has " + std::to_string(input.size()) +
                          " entries, network expects " + std::to_string(n.net.input_dim()));
  }
}

// Softplus underflows to 0 for arguments below about -745; keep the
// components strictly positive anyway.
double floor_positive(double x) {
  return x > 0.0 ? x : std::numeric_limits<double>::denorm_min();
}

}  // namespace

TermPoint eval_neural_outputs(std::span<const double> y) {
  const double sigma = floor_positive(y[0]);
  const double alpha = floor_positive(y[1]);
  const double gap = floor_positive(y[2]);
  double beta = sigma + gap;
  if (!(beta > sigma)) beta = std::nextafter(sigma, std::numeric_limits<double>::infinity());
  return {sigma, alpha, beta};
}

TermPoint eval_neural(const NeuralTerm& n, std::span<const double> input) {
  check_input(n, input);
  const auto y = mlp_forward(n.net, input);
  return eval_neural_outputs(y);
}

TermPoint eval_neural(const NeuralTerm& n, double t, double tau) {
  if (n.dynamic()) {
    const double in[2] = {t, tau};
    return eval_neural(n, std::span<const double>(in, 2));
  }
  return eval_neural(n, std::span<const double>(&tau, 1));
}

TenorDerivatives tenor_derivatives(const NeuralTerm& n, std::span<const double> input) {
  check_input(n, input);
  std::vector<double> direction(input.size(), 0.0);
  direction[n.tenor_index()] = 1.0;
  MlpWorkspace ws;
  mlp_forward_tangent(n.net, input, direction, ws);
  const auto& y = ws.post.back();
  const auto& yd = ws.post_dot.back();
  TenorDerivatives out;
  out.value = eval_neural_outputs(y);
  out.d_sigma = yd[0];
  out.d_alpha = yd[1];
  out.d_beta = yd[0] + yd[2];
  const double s = out.value.sigma;
  if (s < 1e-12) {
    out.sigma_underflow = true;
    return out;
  }
  out.d_alpha_over_sigma = (out.d_alpha * s - out.value.alpha * out.d_sigma) / (s * s);
  out.d_beta_over_sigma = (out.d_beta * s - out.value.beta * out.d_sigma) / (s * s);
  return out;
}

TermPoint eval_term(const TermStructure& term, double t, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("eval_term: tau must be > 0");
  return std::visit(
      [&](const auto& s) -> TermPoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ParametricTerm>) {
          return eval_parametric(s, tau);
        } else if constexpr (std::is_same_v<S, SlicewiseTerm>) {
          return eval_slicewise(s, tau);
        } else {
          return eval_neural(s, t, tau);
        }
      },
      term);
}

TermFunction as_function(const TermStructure& term) {
  return std::visit(
      [](const auto& s) -> TermFunction {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ParametricTerm>) {
          return [s](double, double tau) {
            const auto v = detail::eval_parametric_forms(s.kinds, s.coefficients(), tau);
            return TermPoint{v[0], v[1], v[2]};
          };
        } else if constexpr (std::is_same_v<S, SlicewiseTerm>) {
          return [s](double, double tau) { return eval_slicewise(s, tau); };
        } else {
          return [s](double t, double tau) { return eval_neural(s, t, tau); };
        }
      },
      term);
}

const ConditionResult& FeasibilityReport::condition(const std::string& id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return c;
  }
  throw InvalidArgument("FeasibilityReport: unknown condition " + id);
}

FeasibilityReport feasibility_report(const TermFunction& term, const std::vector<double>& tenors,
                                     const std::vector<double>& dates, double tolerance) {
  if (tenors.empty() || dates.empty()) throw InvalidArgument("feasibility_report: empty grid");
  for (std::size_t i = 1; i < tenors.size(); ++i) {
    if (!(tenors[i] > tenors[i - 1])) {
      throw InvalidArgument("feasibility_report: tenor grid must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i] > dates[i - 1])) {
      throw InvalidArgument("feasibility_report: date grid must be strictly increasing");
    }
  }
  FeasibilityReport r;
  r.dates = dates;
  r.tenors = tenors;
  r.tolerance = tolerance;
  const std::size_t nt = tenors.size();
  const std::size_t n = dates.size() * nt;

  auto make = [n](const char* id, const char* desc) {
    ConditionResult c;
    c.id = id;
    c.description = desc;
    c.magnitude.assign(n, 0.0);
    c.ok.assign(n, true);
    return c;
  };
  ConditionResult ci_a = make("i_alpha_over_sigma", "alpha/sigma non-increasing in tenor");
  ConditionResult ci_b = make("i_beta_over_sigma", "beta/sigma non-increasing in tenor");
  ConditionResult cii = make("ii_sigma_nondecreasing", "sigma non-decreasing in tenor");
  ConditionResult ciii = make("iii_positive", "0 < alpha, beta < infinity and sigma > 0");
  ConditionResult civ = make("iv_sigma_below_beta", "sigma < beta");

  std::vector<TermPoint> pts(n);
  for (std::size_t d = 0; d < dates.size(); ++d) {
    for (std::size_t k = 0; k < nt; ++k) pts[d * nt + k] = term(dates[d], tenors[k]);
    r.sigma_at_min_tenor.push_back(pts[d * nt].sigma);
  }

  auto flag = [tolerance](ConditionResult& c, std::size_t i, double magnitude) {
    if (!std::isfinite(magnitude)) magnitude = std::numeric_limits<double>::infinity();
    c.magnitude[i] = magnitude;
    if (magnitude > tolerance) c.ok[i] = false;
  };

  for (std::size_t d = 0; d < dates.size(); ++d) {
    for (std::size_t k = 0; k < nt; ++k) {
      const std::size_t i = d * nt + k;
      const TermPoint& p = pts[i];
      const bool finite = std::isfinite(p.sigma) && std::isfinite(p.alpha) && std::isfinite(p.beta);
      // iii: a non-positive or non-finite component is a violation of size
      // max(-component, 0), or infinity when non-finite.
      double mag3 = finite ? std::max({0.0, -p.sigma, -p.alpha, -p.beta})
                           : std::numeric_limits<double>::infinity();
      const bool pos = finite && p.sigma > 0.0 && p.alpha > 0.0 && p.beta > 0.0;
      ciii.magnitude[i] = mag3;
      ciii.ok[i] = pos;
      // iv is strict: equality fails.
      civ.magnitude[i] = finite ? std::max(0.0, p.sigma - p.beta) : mag3;
      civ.ok[i] = finite && p.beta - p.sigma > tolerance;
      if (k == 0) continue;
      const TermPoint& q = pts[i - 1];
      flag(cii, i, q.sigma - p.sigma);
      if (q.sigma > 0.0 && p.sigma > 0.0) {
        flag(ci_a, i, p.alpha / p.sigma - q.alpha / q.sigma);
        flag(ci_b, i, p.beta / p.sigma - q.beta / q.sigma);
      } else {
        flag(ci_a, i, std::numeric_limits<double>::infinity());
        flag(ci_b, i, std::numeric_limits<double>::infinity());
      }
    }
  }

  for (ConditionResult* c : {&ci_a, &ci_b, &cii, &ciii, &civ}) {
    for (std::size_t i = 0; i < n; ++i) {
      c->max_violation = std::max(c->max_violation, c->magnitude[i]);
      if (!c->ok[i]) c->pass = false;
    }
    if (!c->pass) r.pass = false;
    r.conditions.push_back(std::move(*c));
  }
  return r;
}

FeasibilityReport feasibility_report(const TermStructure& term, const std::vector<double>& tenors,
                                     const std::vector<double>& dates, double tolerance) {
  return feasibility_report(as_function(term), tenors, dates, tolerance);
}

nlohmann::json feasibility_to_json(const FeasibilityReport& r) {
  nlohmann::json j;
  j["pass"] = r.pass;
  j["tolerance"] = r.tolerance;
  j["dates"] = r.dates;
  j["tenor_min"] = r.tenors.front();
  j["tenor_max"] = r.tenors.back();
  j["tenor_count"] = r.tenors.size();
  j["sigma_at_min_tenor"] = r.sigma_at_min_tenor;
  nlohmann::json conds = nlohmann::json::array();
  const std::size_t nt = r.tenors.size();
  for (const auto& c : r.conditions) {
    nlohmann::json cj;
    cj["id"] = c.id;
    cj["description"] = c.description;
    cj["pass"] = c.pass;
    cj["max_violation"] = json_number(c.max_violation);
    nlohmann::json viol = nlohmann::json::array();
    for (std::size_t i = 0; i < c.ok.size(); ++i) {
      if (c.ok[i]) continue;
      viol.push_back({{"date", r.dates[i / nt]},
                      {"tenor", r.tenors[i % nt]},
                      {"magnitude", json_number(c.magnitude[i])}});
    }
    cj["violations"] = std::move(viol);
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  return j;
}

namespace {

const char* kind_name(FormKind k) { return k == FormKind::kSimple ? "a" : "b"; }

FormKind kind_from(const nlohmann::json& j, const char* key) {
  const std::string s = j.at(key).get<std::string>();
  if (s == "a") return FormKind::kSimple;
  if (s == "b") return FormKind::kSophisticated;
  throw SchemaError(std::string("term JSON: kind of ") + key + " must be \"a\" or \"b\"");
}

}  // namespace

nlohmann::json term_to_json(const TermStructure& term) {
  return std::visit(
      [](const auto& s) -> nlohmann::json {
        using S = std::decay_t<decltype(s)>;
        nlohmann::json j;
        j["schema_version"] = 1;
        if constexpr (std::is_same_v<S, ParametricTerm>) {
          j["type"] = "parametric";
          j["kinds"] = {{"sigma", kind_name(s.kinds.sigma)},
                        {"alpha", kind_name(s.kinds.alpha)},
                        {"beta", kind_name(s.kinds.beta)}};
          const auto c = s.coefficients();
          nlohmann::json params;
          for (std::size_t i = 0; i < kNumParametric; ++i) params[param_name(i)] = c[i];
          j["params"] = params;
        } else if constexpr (std::is_same_v<S, SlicewiseTerm>) {
          j["type"] = "slicewise";
          j["interpolation"] = "linear";
          nlohmann::json knots = nlohmann::json::array();
          for (std::size_t i = 0; i < s.tenors.size(); ++i) {
            knots.push_back({{"tenor", s.tenors[i]},
                             {"sigma", s.knots[i].sigma},
                             {"alpha", s.knots[i].alpha},
                             {"beta", s.knots[i].beta}});
          }
          j["knots"] = std::move(knots);
        } else {
          j["type"] = "neural";
          j["net"] = mlp_to_json(s.net);
        }
        return j;
      },
      term);
}

TermStructure term_from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "parametric") {
      ParametricTerm p;
      const auto& k = j.at("kinds");
      p.kinds = {kind_from(k, "sigma"), kind_from(k, "alpha"), kind_from(k, "beta")};
      std::array<double, kNumParametric> c = p.coefficients();
      const auto& params = j.at("params");
      for (std::size_t i = 0; i < kNumParametric; ++i) {
        if (params.contains(param_name(i))) c[i] = params.at(param_name(i)).get<double>();
      }
      p.set_coefficients(c);
      p.validate();
      return p;
    }
    if (type == "slicewise") {
      SlicewiseTerm s;
      for (const auto& k : j.at("knots")) {
        s.tenors.push_back(k.at("tenor").get<double>());
        s.knots.push_back(
            {k.at("sigma").get<double>(), k.at("alpha").get<double>(), k.at("beta").get<double>()});
      }
      s.validate();
      return s;
    }
    if (type == "neural") {
      NeuralTerm n{mlp_from_json(j.at("net"))};
      n.validate();
      return n;
    }
    throw SchemaError("term JSON: unknown type \"" + type + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("term JSON: ") + e.what());
  }
}

std::string term_samples_csv(const TermStructure& term, const std::vector<double>& tenors,
                             const std::vector<double>& dates) {
  std::string out = dates.empty() ? "tenor,sigma,alpha,beta\n" : "date_t,tenor,sigma,alpha,beta\n";
  auto fn = as_function(term);
  auto row = [&](std::optional<double> t, double tau) {
    const TermPoint p = fn(t.value_or(0.0), tau);
    if (t) out += format_shortest(*t) + ",";
    out += format_shortest(tau) + "," + format_shortest(p.sigma) + "," +
           format_shortest(p.alpha) + "," + format_shortest(p.beta) + "\n";
  };
  if (dates.empty()) {
    for (double tau : tenors) row(std::nullopt, tau);
  } else {
    for (double t : dates) {
      for (double tau : tenors) row(t, tau);
    }
  }
  return out;
}

}  // namespace alp

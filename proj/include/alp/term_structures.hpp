#pragma once

// Term structures tau -> (sigma, alpha, beta): prescribed parametric forms,
// interpolated slices, and neural networks of tau or (t, tau).

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "alp/nn.hpp"
#include "alp/pricing.hpp"

namespace alp {

enum class FormKind { kSimple, kSophisticated };

struct ParametricKinds {
  FormKind sigma = FormKind::kSimple;
  FormKind alpha = FormKind::kSophisticated;
  FormKind beta = FormKind::kSophisticated;

  bool operator==(const ParametricKinds&) const = default;
};

/// Index of each coefficient in ParametricTerm::coefficients().
enum ParamIndex : std::size_t {
  kSigma0 = 0, kSigma1, kAlpha0, kAlpha1, kBeta0, kBeta1, kH0, kH1, kNumParametric
};

const char* param_name(std::size_t index);

struct ParametricTerm {
  ParametricKinds kinds;
  double sigma0 = 0.15;
  double sigma1 = 1.0;  // used only by the sophisticated sigma form
  double alpha0 = 0.8;
  double alpha1 = 1.0;
  double beta0 = 0.7;
  double beta1 = 2.0;
  double h0 = 0.45;
  double h1 = 0.5;  // used only by the sophisticated sigma form

  /// sigma^a, alpha^b, beta^b with sigma0 = 0.15, H0 = 0.45, alpha0 = 0.8,
  /// alpha1 = 1, beta0 = 0.7, beta1 = 2.
  static ParametricTerm eq24();

  std::array<double, kNumParametric> coefficients() const;
  void set_coefficients(const std::array<double, kNumParametric>& c);
  /// Which coefficients the selected forms actually read.
  std::array<bool, kNumParametric> used() const;
  /// Throws DomainError on out-of-range coefficients.
  void validate() const;

  bool operator==(const ParametricTerm&) const = default;
};

namespace detail {

/// The forms, evaluated on any scalar type so that calibration can
/// differentiate with respect to the coefficients. alpha and beta read the
/// sigma component selected by kinds.sigma.
template <typename T>
std::array<T, 3> eval_parametric_forms(const ParametricKinds& kinds,
                                       const std::array<T, kNumParametric>& c, double tau) {
  using std::atan;
  using std::exp;
  const double log_tau = std::log(tau);
  T sigma;
  if (kinds.sigma == FormKind::kSimple) {
    sigma = c[kSigma0] * exp(c[kH0] * log_tau);
  } else {
    const double half_pi = 0.5 * M_PI;
    sigma = atan(c[kSigma0] * half_pi * exp(c[kH0] * log_tau)) /
            atan(half_pi * exp(-c[kH1] * log_tau) / c[kSigma1]);
  }
  const T one_plus = sigma + 1.0;
  const T alpha = kinds.alpha == FormKind::kSimple
                      ? c[kAlpha0]
                      : c[kAlpha1] + (c[kAlpha0] - c[kAlpha1]) / one_plus;
  const T beta = kinds.beta == FormKind::kSimple
                     ? c[kBeta0] + sigma
                     : c[kBeta1] + (c[kBeta0] - c[kBeta1]) / one_plus + sigma;
  return {sigma, alpha, beta};
}

}  // namespace detail

/// Throws InfeasibleError (naming the tenor) if beta <= sigma or a component
/// is not positive.
TermPoint eval_parametric(const ParametricTerm& p, double tau);

struct SlicewiseTerm {
  std::vector<double> tenors;  // strictly increasing
  std::vector<TermPoint> knots;

  void validate() const;
};

/// Linear interpolation; flat outside the knot range, with `extrapolated` set.
TermPoint eval_slicewise(const SlicewiseTerm& s, double tau, bool* extrapolated = nullptr);

/// sigma = softplus(y1), alpha = softplus(y2), beta = sigma + softplus(y3),
/// where y is the raw last-layer output; the MLP's output transform is softplus.
struct NeuralTerm {
  MLP net;

  bool dynamic() const { return net.input_dim() == 2; }
  std::size_t tenor_index() const { return dynamic() ? 1 : 0; }
  void validate() const;

  /// Build a network of the right shape: input (tau) or (t, tau), output 3.
  static NeuralTerm create(bool dynamic, const std::vector<std::size_t>& hidden,
                           Activation activation, std::uint64_t seed);
};

/// Input is {tau} for static structures and {t, tau} for dynamic ones.
TermPoint eval_neural(const NeuralTerm& n, std::span<const double> input);
TermPoint eval_neural(const NeuralTerm& n, double t, double tau);
/// The same mapping applied to raw network outputs (already softplus-transformed).
TermPoint eval_neural_outputs(std::span<const double> y);

struct TenorDerivatives {
  TermPoint value;
  double d_sigma = 0.0;
  double d_alpha = 0.0;
  double d_beta = 0.0;
  double d_alpha_over_sigma = 0.0;
  double d_beta_over_sigma = 0.0;
  bool sigma_underflow = false;  // sigma < 1e-12: quotient terms not formed
};

TenorDerivatives tenor_derivatives(const NeuralTerm& n, std::span<const double> input);

using TermStructure = std::variant<ParametricTerm, SlicewiseTerm, NeuralTerm>;

/// Evaluate any representation at calendar time t (ignored unless dynamic).
TermPoint eval_term(const TermStructure& term, double t, double tau);

/// Raw evaluator used by feasibility checks; no validation of the result.
using TermFunction = std::function<TermPoint(double t, double tau)>;
TermFunction as_function(const TermStructure& term);

struct ConditionResult {
  std::string id;           // "i_alpha_over_sigma", ...
  std::string description;
  std::vector<double> magnitude;  // per (date, tenor) point, row-major by date
  std::vector<bool> ok;
  double max_violation = 0.0;
  bool pass = true;
};

struct FeasibilityReport {
  std::vector<double> dates;
  std::vector<double> tenors;
  std::vector<ConditionResult> conditions;
  std::vector<double> sigma_at_min_tenor;  // one per date; sigma(0) = 0 is not enforced
  double tolerance = 1e-8;
  bool pass = true;

  const ConditionResult& condition(const std::string& id) const;
};

/// Checks monotonicity (discrete differences along the sorted tenor grid),
/// positivity and sigma < beta at every (date, tenor). Static structures use
/// dates = {0}.
FeasibilityReport feasibility_report(const TermFunction& term, const std::vector<double>& tenors,
                                     const std::vector<double>& dates = {0.0},
                                     double tolerance = 1e-8);
FeasibilityReport feasibility_report(const TermStructure& term, const std::vector<double>& tenors,
                                     const std::vector<double>& dates = {0.0},
                                     double tolerance = 1e-8);

nlohmann::json feasibility_to_json(const FeasibilityReport& r);

nlohmann::json term_to_json(const TermStructure& term);
TermStructure term_from_json(const nlohmann::json& j);

/// CSV columns: [date_t,]tenor,sigma,alpha,beta
std::string term_samples_csv(const TermStructure& term, const std::vector<double>& tenors,
                             const std::vector<double>& dates = {});

}  // namespace alp

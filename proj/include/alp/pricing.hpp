#pragma once

// European option prices under the additive logistic martingale and
// Black-Scholes implied-volatility utilities.

#include <atomic>
#include <cmath>
#include <sstream>

#include "alp/gl_dist.hpp"

namespace alp {

struct MarketConvention {
  double spot = 1.0;  // S0
  double rate = 0.02; // continuously compounded r

  void validate() const;
};

/// Marginal law parameters at a fixed tenor.
struct TermPoint {
  double sigma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  bool operator==(const TermPoint&) const = default;
};

enum class OptionKind { kCall, kPut };

enum class QuoteKind { kCallPrice, kPutPrice, kImpliedVol };

struct OptionQuote {
  double moneyness = 1.0;  // K / S0
  double tenor = 1.0;      // years
  double value = 0.0;
  QuoteKind kind = QuoteKind::kCallPrice;

  void validate() const;
};

namespace testing {
// Flips the sign of the martingale drift. Exists only so that the invariant
// suite can be shown to detect a broken drift.
void set_drift_sign_fault(bool enabled);
}  // namespace testing

namespace detail {
extern std::atomic<bool> g_drift_sign_fault;

inline double drift_sign() {
  return g_drift_sign_fault.load(std::memory_order_relaxed) ? -1.0 : 1.0;
}

template <typename T>
void check_pricing_point(const T& sigma, const T& alpha, const T& beta, double tenor) {
  const double s = value_of(sigma);
  const double a = value_of(alpha);
  const double b = value_of(beta);
  if (!(s > 0.0) || !(a > 0.0) || !(b > 0.0) || !(s < b) || !std::isfinite(s) ||
      !std::isfinite(a) || !std::isfinite(b)) {
    std::ostringstream msg;
    msg << "term structure not pricing-feasible at tenor " << tenor << ": sigma=" << s
        << " alpha=" << a << " beta=" << b << " (requires sigma, alpha, beta > 0 and sigma < beta)";
    throw InfeasibleError(msg.str(), tenor);
  }
}
}  // namespace detail

/// mu = log B(alpha + sigma, beta - sigma) - log B(alpha, beta); requires sigma < beta.
template <typename T>
T martingale_drift(const T& sigma, const T& alpha, const T& beta) {
  if (!(value_of(sigma) > 0.0) || !(value_of(alpha) > 0.0) || !(value_of(beta) > 0.0)) {
    throw DomainError("martingale_drift: sigma, alpha, beta must be > 0");
  }
  if (!(value_of(sigma) < value_of(beta))) {
    throw DomainError("martingale_drift: requires sigma < beta");
  }
  return detail::drift_sign() *
         (log_beta(alpha + sigma, beta - sigma) - log_beta(alpha, beta));
}

/// Prices at one tenor for many moneyness values. The two log-beta constants
/// (and hence the drift) are shared by every strike of the slice.
template <typename T>
class SlicePricer {
 public:
  SlicePricer(const T& sigma, const T& alpha, const T& beta, double tenor,
              const MarketConvention& conv)
      : sigma_(sigma), alpha_(alpha), beta_(beta), tenor_(tenor), conv_(conv) {
    detail::check_pricing_point(sigma, alpha, beta, tenor);
    if (!(tenor > 0.0)) throw DomainError("SlicePricer: tenor must be > 0");
    lb_shift_ = log_beta(alpha + sigma, beta - sigma);
    lb_base_ = log_beta(alpha, beta);
    mu_ = detail::drift_sign() * (lb_shift_ - lb_base_);
    discount_ = std::exp(-conv.rate * tenor);
  }

  const T& drift() const { return mu_; }

  T d(double moneyness) const {
    return (-std::log(moneyness) + conv_.rate * tenor_ - mu_) / sigma_;
  }

  T call(double moneyness) const {
    const T dd = d(moneyness);
    const T shifted = detail::std_gl_cdf_lb(dd, beta_ - sigma_, alpha_ + sigma_, lb_shift_);
    const T base = detail::std_gl_cdf_lb(dd, beta_, alpha_, lb_base_);
    return conv_.spot * (shifted - (discount_ * moneyness) * base);
  }

  T put(double moneyness) const {
    const T dd = -d(moneyness);
    const T shifted = detail::std_gl_cdf_lb(dd, alpha_ + sigma_, beta_ - sigma_, lb_shift_);
    const T base = detail::std_gl_cdf_lb(dd, alpha_, beta_, lb_base_);
    return conv_.spot * ((discount_ * moneyness) * base - shifted);
  }

 private:
  T sigma_, alpha_, beta_;
  double tenor_;
  MarketConvention conv_;
  T lb_shift_, lb_base_, mu_;
  double discount_ = 1.0;
};

double price_call(double moneyness, double tenor, const TermPoint& term,
                  const MarketConvention& conv);
double price_put(double moneyness, double tenor, const TermPoint& term,
                 const MarketConvention& conv);

// Black-Scholes with strike K = moneyness * spot.
double bs_price(double moneyness, double tenor, double vol, OptionKind kind,
                const MarketConvention& conv);
double bs_vega(double moneyness, double tenor, double vol, const MarketConvention& conv);

/// Black-Scholes volatility reproducing `price`. Throws ArbitrageError when the
/// price lies outside the no-arbitrage bounds, NumericalError when no volatility
/// in (0, 5) reproduces it within 100 iterations.
double bs_implied_vol(double price, double moneyness, double tenor, OptionKind kind,
                      const MarketConvention& conv);

}  // namespace alp

#include "alp/pricing.hpp"

#include <algorithm>
#include <limits>

namespace alp {

namespace detail {
std::atomic<bool> g_drift_sign_fault{false};
}  // namespace detail

namespace testing {
void set_drift_sign_fault(bool enabled) { detail::g_drift_sign_fault.store(enabled); }
}  // namespace testing

void MarketConvention::validate() const {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw DomainError("MarketConvention: spot must be > 0");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("MarketConvention: rate must be >= 0");
}

void OptionQuote::validate() const {
  if (!(moneyness > 0.0)) throw DomainError("OptionQuote: moneyness must be > 0");
  if (!(tenor > 0.0)) throw DomainError("OptionQuote: tenor must be > 0");
  if (!(value >= 0.0)) throw DomainError("OptionQuote: value must be >= 0");
  if (kind == QuoteKind::kImpliedVol && !(value < 5.0)) {
    throw DomainError("OptionQuote: implied vol must be < 5");
  }
}

namespace {

void check_contract(double moneyness, double tenor) {
  if (!(moneyness > 0.0) || !std::isfinite(moneyness)) {
    throw DomainError("moneyness must be finite and > 0");
  }
  if (!(tenor > 0.0) || !std::isfinite(tenor)) throw DomainError("tenor must be finite and > 0");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double price_call(double moneyness, double tenor, const TermPoint& term,
                  const MarketConvention& conv) {
  check_contract(moneyness, tenor);
  conv.validate();
  return SlicePricer<double>(term.sigma, term.alpha, term.beta, tenor, conv).call(moneyness);
}

double price_put(double moneyness, double tenor, const TermPoint& term,
                 const MarketConvention& conv) {
  check_contract(moneyness, tenor);
  conv.validate();
  return SlicePricer<double>(term.sigma, term.alpha, term.beta, tenor, conv).put(moneyness);
}

double bs_price(double moneyness, double tenor, double vol, OptionKind kind,
                const MarketConvention& conv) {
  check_contract(moneyness, tenor);
  const double strike = moneyness * conv.spot;
  const double df = std::exp(-conv.rate * tenor);
  if (vol <= 0.0) {
    const double fwd_intrinsic = conv.spot - df * strike;
    return kind == OptionKind::kCall ? std::max(fwd_intrinsic, 0.0) : std::max(-fwd_intrinsic, 0.0);
  }
  const double sd = vol * std::sqrt(tenor);
  const double d1 = (std::log(conv.spot / strike) + conv.rate * tenor) / sd + 0.5 * sd;
  const double d2 = d1 - sd;
  if (kind == OptionKind::kCall) return conv.spot * norm_cdf(d1) - df * strike * norm_cdf(d2);
  return df * strike * norm_cdf(-d2) - conv.spot * norm_cdf(-d1);
}

double bs_vega(double moneyness, double tenor, double vol, const MarketConvention& conv) {
  check_contract(moneyness, tenor);
  const double strike = moneyness * conv.spot;
  const double sd = vol * std::sqrt(tenor);
  const double d1 = (std::log(conv.spot / strike) + conv.rate * tenor) / sd + 0.5 * sd;
  return conv.spot * std::sqrt(tenor) * std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * M_PI);
}

double bs_implied_vol(double price, double moneyness, double tenor, OptionKind kind,
                      const MarketConvention& conv) {
  check_contract(moneyness, tenor);
  conv.validate();
  constexpr double kVolMax = 5.0;
  constexpr int kMaxIter = 100;
  const double df = std::exp(-conv.rate * tenor);
  const double strike = moneyness * conv.spot;
  const double lower = kind == OptionKind::kCall ? std::max(conv.spot - df * strike, 0.0)
                                                 : std::max(df * strike - conv.spot, 0.0);
  const double upper = kind == OptionKind::kCall ? conv.spot : df * strike;
  if (!std::isfinite(price) || !(price > lower) || !(price < upper)) {
    std::ostringstream msg;
    msg << "bs_implied_vol: price " << price << " outside no-arbitrage bounds (" << lower << ", "
        << upper << ") for moneyness " << moneyness << ", tenor " << tenor;
    throw ArbitrageError(msg.str());
  }
  if (price >= bs_price(moneyness, tenor, kVolMax, kind, conv)) {
    throw NumericalError("bs_implied_vol: implied volatility exceeds 5");
  }

  double lo = 0.0;
  double hi = kVolMax;
  // Brenner-Subrahmanyam style start, adjusted for moneyness
  double vol = std::sqrt(2.0 * M_PI / tenor) * (price - lower) / conv.spot +
               std::sqrt(2.0 * std::fabs(std::log(conv.spot / (df * strike))) / tenor);
  vol = std::clamp(vol, 1e-4, kVolMax * 0.5);
  const double tol = 1e-13 * conv.spot;
  for (int it = 0; it < kMaxIter; ++it) {
    const double diff = bs_price(moneyness, tenor, vol, kind, conv) - price;
    if (std::fabs(diff) <= tol) return vol;
    if (diff > 0.0) {
      hi = vol;
    } else {
      lo = vol;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) return 0.5 * (lo + hi);
    const double vega = bs_vega(moneyness, tenor, vol, conv);
    double next = vega > 0.0 ? vol - diff / vega : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    vol = next;
  }
  throw NumericalError("bs_implied_vol: no convergence after 100 iterations");
}

}  // namespace alp

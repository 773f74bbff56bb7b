#pragma once

// Option surfaces on a (tenor x moneyness) grid: generation and CSV/JSON I/O.
//
// CSV layout (long format, LF line endings):
//   date,tenor,moneyness,value,kind
// `date` is blank for a single static surface, `value` is blank for a missing
// quote, and `kind` is call_price or implied_vol for every row. Rows are
// ordered by date, then tenor, then moneyness, and every date covers the same
// full grid.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alp/term_structures.hpp"

namespace alp {

enum class SurfaceKind { kCallPrice, kImpliedVol };

std::string to_string(SurfaceKind k);
SurfaceKind surface_kind_from_string(const std::string& s);

struct VolSurface {
  std::optional<double> date;
  std::vector<double> moneyness;
  std::vector<double> tenors;
  std::vector<double> quotes;  // row-major tenors x moneyness; NaN marks a missing quote
  SurfaceKind kind = SurfaceKind::kCallPrice;
  MarketConvention convention;

  VolSurface() = default;
  VolSurface(std::vector<double> moneyness_grid, std::vector<double> tenor_grid, SurfaceKind k,
             const MarketConvention& conv, std::optional<double> t = std::nullopt);

  double& at(std::size_t tenor, std::size_t m) { return quotes[tenor * moneyness.size() + m]; }
  double at(std::size_t tenor, std::size_t m) const {
    return quotes[tenor * moneyness.size() + m];
  }
  std::size_t num_present() const;
  void validate() const;
};

/// Bitwise comparison of grids and quotes, NaN equal to NaN.
bool same_surface(const VolSurface& a, const VolSurface& b);

struct SurfaceSequence {
  std::vector<VolSurface> surfaces;

  bool empty() const { return surfaces.empty(); }
  /// Shared grids, kind and convention; strictly increasing dates.
  void validate() const;
};

struct SynthesisResult {
  VolSurface surface;
  std::vector<std::string> warnings;
};

/// Call prices from the closed form, or Black-Scholes vols of those prices.
/// Throws InfeasibleError naming the first tenor at which the term structure
/// is not pricing-feasible. Cells whose vol cannot be inverted are left
/// missing and reported in `warnings`.
SynthesisResult synthesize_surface(const TermStructure& term, const std::vector<double>& moneyness,
                                   const std::vector<double>& tenors, const MarketConvention& conv,
                                   SurfaceKind kind, std::optional<double> date = std::nullopt);

/// Parametric coefficients as a function of calendar time.
using ParametricPath = std::function<ParametricTerm(double t)>;

/// eq24 with sigma0(t) = 0.15 + 0.03 sin(2 pi t).
ParametricPath sin_path();

struct SequenceSynthesis {
  SurfaceSequence sequence;
  std::vector<std::string> warnings;
};

SequenceSynthesis synthesize_sequence(const ParametricPath& path, const std::vector<double>& dates,
                                      const std::vector<double>& moneyness,
                                      const std::vector<double>& tenors,
                                      const MarketConvention& conv, SurfaceKind kind);

struct CellConversion {
  VolSurface surface;
  std::vector<std::string> warnings;  // one per cell that became missing
};

CellConversion surface_prices_to_ivs(const VolSurface& s);
CellConversion surface_ivs_to_prices(const VolSurface& s);

/// Rescale to spot 1: moneyness is unchanged, call prices are divided by spot.
VolSurface normalize_spot(const VolSurface& s);

/// n points from lo to hi inclusive, evenly spaced.
std::vector<double> linspace(double lo, double hi, std::size_t n);
/// 50 moneyness values in [0.8, 1.2] and 100 tenors in [1/365.25, 2].
std::vector<double> paper_moneyness_grid();
std::vector<double> paper_tenor_grid();
/// 13 moneyness values in [0.8, 1.2] and 20 tenors in [0.1, 2].
std::vector<double> coarse_moneyness_grid();
std::vector<double> coarse_tenor_grid();

std::string surface_to_csv(const SurfaceSequence& seq);
std::string surface_to_csv(const VolSurface& s);
/// The convention is not stored in the file and is supplied by the caller.
SurfaceSequence surface_from_csv(const std::string& text, const MarketConvention& conv,
                                 const std::string& source = "<memory>");

SurfaceSequence load_surface_csv(const std::string& path, const MarketConvention& conv);
void save_surface_csv(const SurfaceSequence& seq, const std::string& path);
void save_surface_csv(const VolSurface& s, const std::string& path);

/// {"kind":..., "rows":[{"date","tenor","moneyness","value"}...]}; missing values are null.
nlohmann::json surface_to_json(const SurfaceSequence& seq);

}  // namespace alp

#pragma once

// Calibration of term structures to option surfaces.
//
// The pricing loss is the plain mean squared error over present cells (call
// prices at spot 1, or Black-Scholes vols when the target is ivs). Neural
// structures add lambda times the hinge penalty on the tenor derivatives.

#include <optional>
#include <string>
#include <vector>

#include "alp/surfaces.hpp"
#include "alp/term_structures.hpp"

namespace alp {

enum class TargetKind { kPrices, kIvs };

std::string to_string(TargetKind t);
TargetKind target_kind_from_string(const std::string& s);

struct Architecture {
  std::vector<std::size_t> hidden = {32, 32};
  Activation activation = Activation::kRelu;
};

struct CalibrationConfig {
  double lambda = 1.0;
  int epochs = 20000;
  double learning_rate = 1e-2;
  int decay_every = 5000;  // epochs between step decays, 0 for a constant rate
  double decay_factor = 0.5;
  std::uint64_t seed = 0;
  std::size_t penalty_tenors = 128;
  std::size_t penalty_dates = 32;
  TargetKind target = TargetKind::kPrices;
  MarketConvention convention;
  double early_stop_tol = 1e-12;
  int early_stop_window = 500;  // 0 disables early stopping
  double divergence_threshold = 1e6;
  int slice_epochs = 5000;
  double slice_learning_rate = 1e-2;
  ParametricKinds kinds;                 // parametric driver only
  std::optional<ParametricTerm> initial;  // parametric driver start; eq24 scaled by 0.9 if unset
  int polish_iterations = 50;  // Levenberg-Marquardt steps after Adam (parametric, slicewise)

  void validate() const;
  double rate_at(int epoch) const;
};

nlohmann::json config_to_json(const CalibrationConfig& c);
nlohmann::json architecture_to_json(const Architecture& a);
/// Reads the config_to_json schema, plus an optional "architecture" object.
/// Keys that are absent keep their current value; unknown keys throw SchemaError.
void config_from_json(const nlohmann::json& j, CalibrationConfig& c, Architecture& a);

struct LossRecord {
  int epoch = 0;
  double pricing = 0.0;
  double constraint = 0.0;
  double total = 0.0;
};

enum class StopReason { kEpochBudget, kEarlyStop, kDiverged };
std::string to_string(StopReason s);

struct MseRow {
  std::string label;  // requested tenor, or "All"
  double tenor = 0.0;  // nearest data tenor actually used, 0 for All
  double price_mse = 0.0;
  double iv_mse = 0.0;  // NaN when no cell could be inverted
};

struct CalibrationReport {
  std::string model;
  nlohmann::json config;
  std::vector<LossRecord> loss_history;
  StopReason stop = StopReason::kEpochBudget;
  std::string message;
  std::vector<double> dates;   // encoded calendar times, {0} for a static surface
  std::vector<double> tenors;  // data grid
  std::vector<TermPoint> term_samples;  // dates x tenors, row-major by date
  std::vector<double> per_tenor_mse;    // normalized price MSE, all dates pooled
  std::vector<double> per_tenor_iv_mse;
  std::vector<double> per_date_mse;
  double price_mse = 0.0;
  double iv_mse = 0.0;
  std::vector<MseRow> mse_table;
  FeasibilityReport feasibility;
  std::optional<ParametricTerm> parametric;
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;
};

/// The report as JSON; the wall-clock field is omitted when `with_timing` is false.
nlohmann::json report_to_json(const CalibrationReport& r, bool with_timing = true);

struct CalibrationResult {
  TermStructure term;
  CalibrationReport report;
};

/// Mean squared error over present cells. All surfaces must share a grid;
/// quotes are normalized to spot 1 first. Dynamic neural structures are
/// evaluated at each surface's date relative to the first one.
double loss_pricing(const TermStructure& term, const SurfaceSequence& data,
                    TargetKind target = TargetKind::kPrices);
double loss_pricing(const TermStructure& term, const VolSurface& data,
                    TargetKind target = TargetKind::kPrices);

/// Mean over the (date x tenor) grid of
///   (d/dtau alpha/sigma)+ + (d/dtau beta/sigma)+ + (-d/dtau sigma)+.
/// Points where sigma < 1e-12 contribute 1 each. `dates` is ignored for static nets.
double loss_constraint(const NeuralTerm& term, const std::vector<double>& tenors,
                       const std::vector<double>& dates = {0.0});

/// Uniform grids over the data range used by the penalty.
struct PenaltyGrid {
  std::vector<double> dates;
  std::vector<double> tenors;
};
PenaltyGrid penalty_grid(const SurfaceSequence& data, const CalibrationConfig& config,
                         bool dynamic);

struct NeuralLoss {
  double pricing = 0.0;
  double constraint = 0.0;
  double total = 0.0;
  std::vector<double> gradient;  // d total / d weights, empty unless requested
};

/// L_P + lambda L_C and its exact weight gradient, as used by the trainer.
NeuralLoss neural_loss(const NeuralTerm& term, const SurfaceSequence& data,
                       const CalibrationConfig& config, bool with_gradient);

CalibrationResult calibrate_parametric(const VolSurface& surface, const CalibrationConfig& config);
CalibrationResult calibrate_slicewise(const VolSurface& surface, const CalibrationConfig& config);
CalibrationResult calibrate_neural(const VolSurface& surface, const CalibrationConfig& config,
                                   const Architecture& arch);
/// Dynamic net of (t, tau), t in years from the first date.
CalibrationResult calibrate_sequence(const SurfaceSequence& surfaces,
                                     const CalibrationConfig& config, const Architecture& arch);

}  // namespace alp

#include "alp/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include "alp/dual.hpp"
#include "alp/errors.hpp"
#include "alp/format.hpp"

namespace alp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(TargetKind t) { return t == TargetKind::kPrices ? "prices" : "ivs"; }

TargetKind target_kind_from_string(const std::string& s) {
  if (s == "prices") return TargetKind::kPrices;
  if (s == "ivs") return TargetKind::kIvs;
  throw InvalidArgument("unknown target kind \"" + s + "\" (prices or ivs)");
}

std::string to_string(StopReason s) {
  switch (s) {
    case StopReason::kEpochBudget: return "epoch_budget";
    case StopReason::kEarlyStop: return "early_stop";
    case StopReason::kDiverged: return "diverged";
  }
  return "unknown";
}

void CalibrationConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (decay_every < 0) throw InvalidArgument("decay_every must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw InvalidArgument("decay_factor must lie in (0, 1]");
  }
  if (penalty_tenors < 2) throw InvalidArgument("penalty_tenors must be >= 2");
  if (penalty_dates < 1) throw InvalidArgument("penalty_dates must be >= 1");
  if (early_stop_window < 0) throw InvalidArgument("early_stop_window must be >= 0");
  if (slice_epochs < 0) throw InvalidArgument("slice_epochs must be >= 0");
  if (!(slice_learning_rate > 0.0)) throw InvalidArgument("slice_learning_rate must be > 0");
  if (polish_iterations < 0) throw InvalidArgument("polish_iterations must be >= 0");
  convention.validate();
  if (initial) initial->validate();
}

double CalibrationConfig::rate_at(int epoch) const {
  if (decay_every <= 0) return learning_rate;
  return learning_rate * std::pow(decay_factor, epoch / decay_every);
}

nlohmann::json config_to_json(const CalibrationConfig& c) {
  nlohmann::json j;
  j["lambda"] = c.lambda;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["decay_every"] = c.decay_every;
  j["decay_factor"] = c.decay_factor;
  j["seed"] = c.seed;
  j["penalty_tenors"] = c.penalty_tenors;
  j["penalty_dates"] = c.penalty_dates;
  j["target"] = to_string(c.target);
  j["convention"] = {{"spot", c.convention.spot}, {"rate", c.convention.rate}};
  j["early_stop_tol"] = c.early_stop_tol;
  j["early_stop_window"] = c.early_stop_window;
  j["divergence_threshold"] = c.divergence_threshold;
  j["slice_epochs"] = c.slice_epochs;
  j["slice_learning_rate"] = c.slice_learning_rate;
  j["polish_iterations"] = c.polish_iterations;
  j["kinds"] = {{"sigma", c.kinds.sigma == FormKind::kSimple ? "a" : "b"},
                {"alpha", c.kinds.alpha == FormKind::kSimple ? "a" : "b"},
                {"beta", c.kinds.beta == FormKind::kSimple ? "a" : "b"}};
  if (c.initial) j["initial"] = term_to_json(*c.initial);
  return j;
}

nlohmann::json architecture_to_json(const Architecture& a) {
  return {{"hidden", a.hidden}, {"activation", to_string(a.activation)}};
}

void config_from_json(const nlohmann::json& j, CalibrationConfig& c, Architecture& a) {
  if (!j.is_object()) throw SchemaError("config: expected a JSON object");
  auto form = [](const nlohmann::json& v, const char* what) {
    const std::string s = v.get<std::string>();
    if (s == "a") return FormKind::kSimple;
    if (s == "b") return FormKind::kSophisticated;
    throw SchemaError(std::string("config: kinds.") + what + " must be \"a\" or \"b\"");
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "decay_every") c.decay_every = v.get<int>();
      else if (key == "decay_factor") c.decay_factor = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "penalty_tenors") c.penalty_tenors = v.get<std::size_t>();
      else if (key == "penalty_dates") c.penalty_dates = v.get<std::size_t>();
      else if (key == "target") c.target = target_kind_from_string(v.get<std::string>());
      else if (key == "convention") {
        c.convention.spot = v.at("spot").get<double>();
        c.convention.rate = v.at("rate").get<double>();
      } else if (key == "early_stop_tol") c.early_stop_tol = v.get<double>();
      else if (key == "early_stop_window") c.early_stop_window = v.get<int>();
      else if (key == "divergence_threshold") c.divergence_threshold = v.get<double>();
      else if (key == "slice_epochs") c.slice_epochs = v.get<int>();
      else if (key == "slice_learning_rate") c.slice_learning_rate = v.get<double>();
      else if (key == "polish_iterations") c.polish_iterations = v.get<int>();
      else if (key == "kinds") {
        c.kinds = {form(v.at("sigma"), "sigma"), form(v.at("alpha"), "alpha"),
                   form(v.at("beta"), "beta")};
      } else if (key == "initial") {
        const TermStructure t = term_from_json(v);
        if (!std::holds_alternative<ParametricTerm>(t)) {
          throw SchemaError("config: initial must be a parametric term structure");
        }
        c.initial = std::get<ParametricTerm>(t);
      } else if (key == "architecture") {
        for (const auto& [ak, av] : v.items()) {
          if (ak == "hidden") a.hidden = av.get<std::vector<std::size_t>>();
          else if (ak == "activation") a.activation = activation_from_string(av.get<std::string>());
          else throw SchemaError("config: unknown architecture key '" + ak + "'");
        }
      } else {
        throw SchemaError("config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
}

namespace {

// One (date, tenor) row of the data, in spot-1 units.
struct Slice {
  double date = 0.0;
  double tenor = 0.0;
  std::size_t date_index = 0;
  std::size_t tenor_index = 0;
  std::vector<double> price;  // NaN when missing
  std::vector<double> iv;     // NaN when missing or not invertible
  std::size_t present = 0;    // cells with a target value
};

struct Dataset {
  std::vector<double> dates;
  std::vector<double> tenors;
  std::vector<double> moneyness;
  std::vector<Slice> slices;  // date-major
  std::size_t present = 0;
  MarketConvention conv;
  TargetKind target = TargetKind::kPrices;
  std::vector<std::string> warnings;

  const std::vector<double>& target_values(const Slice& s) const {
    return target == TargetKind::kPrices ? s.price : s.iv;
  }
};

Dataset build_dataset(const SurfaceSequence& data, TargetKind target) {
  if (data.empty()) throw InvalidArgument("calibration: no surfaces supplied");
  data.validate();
  Dataset ds;
  ds.target = target;
  const VolSurface& first = data.surfaces.front();
  ds.tenors = first.tenors;
  ds.moneyness = first.moneyness;
  ds.conv = first.convention;
  ds.conv.spot = 1.0;
  const double t0 = first.date.value_or(0.0);
  const std::size_t nm = ds.moneyness.size();
  for (std::size_t d = 0; d < data.surfaces.size(); ++d) {
    const VolSurface s = normalize_spot(data.surfaces[d]);
    ds.dates.push_back(s.date.value_or(0.0) - t0);
    for (std::size_t k = 0; k < s.tenors.size(); ++k) {
      Slice sl;
      sl.date = ds.dates.back();
      sl.tenor = s.tenors[k];
      sl.date_index = d;
      sl.tenor_index = k;
      sl.price.assign(nm, kNaN);
      sl.iv.assign(nm, kNaN);
      for (std::size_t j = 0; j < nm; ++j) {
        const double q = s.at(k, j);
        if (std::isnan(q)) continue;
        if (s.kind == SurfaceKind::kCallPrice) {
          sl.price[j] = q;
          try {
            sl.iv[j] = bs_implied_vol(q, ds.moneyness[j], sl.tenor, OptionKind::kCall, ds.conv);
          } catch (const Error& e) {
            if (target == TargetKind::kIvs) {
              ds.warnings.push_back("date " + format_sig12(sl.date) + ", tenor " +
                                    format_sig12(sl.tenor) + ", moneyness " +
                                    format_sig12(ds.moneyness[j]) + ": " + e.what());
            }
          }
        } else {
          sl.iv[j] = q;
          sl.price[j] = bs_price(ds.moneyness[j], sl.tenor, q, OptionKind::kCall, ds.conv);
        }
      }
      const auto& tv = ds.target_values(sl);
      sl.present = static_cast<std::size_t>(
          std::count_if(tv.begin(), tv.end(), [](double x) { return !std::isnan(x); }));
      ds.present += sl.present;
      ds.slices.push_back(std::move(sl));
    }
  }
  if (ds.present == 0) throw InvalidArgument("calibration: surface has no usable quotes");
  return ds;
}

// Black-Scholes vol of a model price. Prices the inverter rejects are pinned
// to the nearest end of the vol range and carry no gradient.
double model_iv(double price, double moneyness, double tenor, const MarketConvention& conv,
                double* inv_vega) {
  try {
    const double v = bs_implied_vol(price, moneyness, tenor, OptionKind::kCall, conv);
    if (inv_vega) {
      const double vega = bs_vega(moneyness, tenor, v, conv);
      *inv_vega = vega > 0.0 ? 1.0 / vega : 0.0;
    }
    return v;
  } catch (const ArbitrageError&) {
    if (inv_vega) *inv_vega = 0.0;
    return 0.0;
  } catch (const NumericalError&) {
    if (inv_vega) *inv_vega = 0.0;
    return 5.0;
  }
}

// Calls f(j, residual, d residual / d(sigma, alpha, beta)) for every present
// cell of the slice. The derivative is zero unless `jac` is set.
template <typename F>
void for_each_residual(const Slice& s, const Dataset& ds, const TermPoint& p, bool jac, F&& f) {
  const auto& target = ds.target_values(s);
  const std::size_t nm = ds.moneyness.size();
  if (jac) {
    using D = Dual<3>;
    const SlicePricer<D> pr(D::variable(p.sigma, 0), D::variable(p.alpha, 1),
                            D::variable(p.beta, 2), s.tenor, ds.conv);
    for (std::size_t j = 0; j < nm; ++j) {
      if (std::isnan(target[j])) continue;
      const D c = pr.call(ds.moneyness[j]);
      if (ds.target == TargetKind::kPrices) {
        f(j, c.v - target[j], c.d);
      } else {
        double inv_vega = 0.0;
        const double v = model_iv(c.v, ds.moneyness[j], s.tenor, ds.conv, &inv_vega);
        f(j, v - target[j],
          std::array<double, 3>{c.d[0] * inv_vega, c.d[1] * inv_vega, c.d[2] * inv_vega});
      }
    }
  } else {
    const SlicePricer<double> pr(p.sigma, p.alpha, p.beta, s.tenor, ds.conv);
    const std::array<double, 3> zero{};
    for (std::size_t j = 0; j < nm; ++j) {
      if (std::isnan(target[j])) continue;
      const double c = pr.call(ds.moneyness[j]);
      if (ds.target == TargetKind::kPrices) {
        f(j, c - target[j], zero);
      } else {
        f(j, model_iv(c, ds.moneyness[j], s.tenor, ds.conv, nullptr) - target[j], zero);
      }
    }
  }
}

struct SliceResult {
  double sse = 0.0;
  std::array<double, 3> grad{};  // d sse / d(sigma, alpha, beta)
};

// Evaluates every slice (in parallel) into its own slot; errors are rethrown
// in slice order so the first infeasible tenor is the one reported.
void evaluate_slices(const Dataset& ds, const std::vector<TermPoint>& points, bool grad,
                     std::vector<SliceResult>& out) {
  const std::size_t n = ds.slices.size();
  out.assign(n, SliceResult{});
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    const Slice& s = ds.slices[i];
    if (s.present == 0) continue;
    try {
      SliceResult r;
      for_each_residual(s, ds, points[i], grad,
                        [&r](std::size_t, double res, const std::array<double, 3>& d) {
                          r.sse += res * res;
                          for (int k = 0; k < 3; ++k) r.grad[k] += 2.0 * res * d[k];
                        });
      out[i] = r;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double pooled_loss(const Dataset& ds, const std::vector<SliceResult>& r) {
  double sum = 0.0;
  for (const auto& x : r) sum += x.sse;
  return sum / static_cast<double>(ds.present);
}

TermPoint neural_point(std::span<const double> y) {
  return eval_neural_outputs(y);
}

std::vector<double> net_input(bool dynamic, double t, double tau) {
  if (dynamic) return {t, tau};
  return {tau};
}

// L_P + lambda L_C for a neural structure, with the weight gradient.
class NeuralProblem {
 public:
  NeuralProblem(const Dataset& ds, PenaltyGrid grid, double lambda, bool dynamic)
      : ds_(ds), grid_(std::move(grid)), lambda_(lambda), dynamic_(dynamic) {
    for (const Slice& s : ds_.slices) slice_inputs_.push_back(net_input(dynamic, s.date, s.tenor));
    for (double t : grid_.dates) {
      for (double tau : grid_.tenors) penalty_inputs_.push_back(net_input(dynamic, t, tau));
    }
    direction_.assign(dynamic ? 2 : 1, 0.0);
    direction_.back() = 1.0;
  }

  NeuralLoss evaluate(const MLP& net, std::span<double> grad) {
    const bool want = !grad.empty();
    NeuralLoss out;
    const std::size_t n = ds_.slices.size();
    points_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      points_[i] = neural_point(mlp_forward(net, slice_inputs_[i], ws_));
    }
    evaluate_slices(ds_, points_, want, results_);
    out.pricing = pooled_loss(ds_, results_);

    const double inv_n = 1.0 / static_cast<double>(ds_.present);
    if (want) {
      for (std::size_t i = 0; i < n; ++i) {
        if (ds_.slices[i].present == 0) continue;
        const auto& g = results_[i].grad;
        const double up[3] = {(g[0] + g[2]) * inv_n, g[1] * inv_n, g[2] * inv_n};
        mlp_forward(net, slice_inputs_[i], ws_);
        mlp_backward(net, ws_, up, {}, grad);
      }
    }

    const double inv_np = 1.0 / static_cast<double>(penalty_inputs_.size());
    double hinge_sum = 0.0;
    for (const auto& in : penalty_inputs_) {
      mlp_forward_tangent(net, in, direction_, ws_);
      const auto& y = ws_.post.back();
      const auto& yd = ws_.post_dot.back();
      const double s = y[0], a = y[1], b = y[0] + y[2];
      const double sd = yd[0], ad = yd[1], bd = yd[0] + yd[2];
      if (!(s >= 1e-12)) {
        hinge_sum += 1.0;
        continue;
      }
      const double s2 = s * s;
      const double q1 = (ad * s - a * sd) / s2;
      const double q2 = (bd * s - b * sd) / s2;
      const double q3 = -sd;
      double gs = 0, ga = 0, gb = 0, gsd = 0, gad = 0, gbd = 0;
      bool active = false;
      if (q1 > 0.0) {
        hinge_sum += q1;
        active = true;
        gad += 1.0 / s;
        gsd += -a / s2;
        ga += -sd / s2;
        gs += -ad / s2 + 2.0 * a * sd / (s2 * s);
      }
      if (q2 > 0.0) {
        hinge_sum += q2;
        active = true;
        gbd += 1.0 / s;
        gsd += -b / s2;
        gb += -sd / s2;
        gs += -bd / s2 + 2.0 * b * sd / (s2 * s);
      }
      if (q3 > 0.0) {
        hinge_sum += q3;
        active = true;
        gsd += -1.0;
      }
      if (want && active && lambda_ > 0.0) {
        const double w = lambda_ * inv_np;
        const double up_v[3] = {(gs + gb) * w, ga * w, gb * w};
        const double up_t[3] = {(gsd + gbd) * w, gad * w, gbd * w};
        mlp_backward(net, ws_, up_v, up_t, grad);
      }
    }
    out.constraint = hinge_sum * inv_np;
    out.total = out.pricing + lambda_ * out.constraint;
    return out;
  }

  // Gauss-Newton system of the pricing loss in the weights, J^T J and J^T r
  // for the unscaled residuals. The Jacobian factors through the three
  // outputs of each slice: J = blockdiag(dr/dy) * dy/dw.
  void gauss_newton(const MLP& net, Eigen::MatrixXd& jtj, Eigen::VectorXd& jtr) {
    const std::size_t n = ds_.slices.size();
    const Eigen::Index np = static_cast<Eigen::Index>(net.num_params());
    points_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      points_[i] = neural_point(mlp_forward(net, slice_inputs_[i], ws_));
    }
    std::vector<Eigen::Matrix3d> m(n, Eigen::Matrix3d::Zero());
    std::vector<Eigen::Vector3d> g(n, Eigen::Vector3d::Zero());
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
      if (ds_.slices[i].present == 0) continue;
      try {
        for_each_residual(ds_.slices[i], ds_, points_[i], true,
                          [&](std::size_t, double r, const std::array<double, 3>& d) {
                            const Eigen::Vector3d dy(d[0] + d[2], d[1], d[2]);
                            m[i] += dy * dy.transpose();
                            g[i] += r * dy;
                          });
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat jn = RowMat::Zero(static_cast<Eigen::Index>(3 * n), np);
    RowMat y = RowMat::Zero(static_cast<Eigen::Index>(3 * n), np);
    jtr = Eigen::VectorXd::Zero(np);
    for (std::size_t i = 0; i < n; ++i) {
      if (ds_.slices[i].present == 0) continue;
      mlp_forward(net, slice_inputs_[i], ws_);
      for (int o = 0; o < 3; ++o) {
        double up[3] = {0.0, 0.0, 0.0};
        up[o] = 1.0;
        const Eigen::Index row = static_cast<Eigen::Index>(3 * i) + o;
        mlp_backward(net, ws_, up, {},
                     std::span<double>(jn.row(row).data(), static_cast<std::size_t>(np)));
      }
      const auto block = jn.middleRows(static_cast<Eigen::Index>(3 * i), 3);
      y.middleRows(static_cast<Eigen::Index>(3 * i), 3) = m[i] * block;
      jtr += block.transpose() * g[i];
    }
    jtj = jn.transpose() * y;
  }

 private:
  const Dataset& ds_;
  PenaltyGrid grid_;
  double lambda_;
  bool dynamic_;
  std::vector<std::vector<double>> slice_inputs_;
  std::vector<std::vector<double>> penalty_inputs_;
  std::vector<double> direction_;
  std::vector<TermPoint> points_;
  std::vector<SliceResult> results_;
  MlpWorkspace ws_;
};

// Levenberg-Marquardt on the network weights. A step is kept only if it
// lowers the total loss and does not reintroduce a penalty that was zero.
void neural_polish(NeuralProblem& problem, MLP& net, int iters, std::vector<LossRecord>& history) {
  if (iters <= 0) return;
  NeuralLoss cur = problem.evaluate(net, {});
  double damping = 1e-3;
  int epoch = history.empty() ? 0 : history.back().epoch + 1;
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  const std::vector<double> base(net.params().begin(), net.params().end());
  std::vector<double> current = base;
  for (int it = 0; it < iters; ++it) {
    problem.gauss_newton(net, jtj, jtr);
    const Eigen::VectorXd diag = jtj.diagonal();
    const double floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index c = 0; c < a.rows(); ++c) a(c, c) += damping * (diag(c) + floor);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      const Eigen::VectorXd step = ldlt.solve(-jtr);
      std::vector<double> trial = current;
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += step(static_cast<Eigen::Index>(k));
      std::copy(trial.begin(), trial.end(), net.params().begin());
      const NeuralLoss t = problem.evaluate(net, {});
      const bool penalty_ok = !(cur.constraint == 0.0 && t.constraint > 0.0);
      if (std::isfinite(t.total) && t.total < cur.total && penalty_ok) {
        current = trial;
        cur = t;
        damping = std::max(damping * 0.3, 1e-12);
        accepted = true;
      } else {
        std::copy(current.begin(), current.end(), net.params().begin());
        damping *= 10.0;
      }
    }
    history.push_back({epoch++, cur.pricing, cur.constraint, cur.total});
    if (!accepted) break;
  }
  std::copy(current.begin(), current.end(), net.params().begin());
}

struct TrainOutcome {
  StopReason stop = StopReason::kEpochBudget;
  std::string message;
};

// Full-batch Adam. Each epoch records the loss at the current parameters and
// then updates them, so the last record always belongs to the returned
// parameters. `eval` fills the gradient and returns (L_P, L_C, L).
template <typename Eval>
TrainOutcome run_adam(std::vector<double>& params, const std::vector<bool>& frozen, int epochs,
                      double lr0, int decay_every, double decay_factor,
                      const CalibrationConfig& cfg, Eval&& eval,
                      std::vector<LossRecord>& history) {
  TrainOutcome out;
  AdamState state(params.size(), lr0);
  std::vector<double> grad(params.size());
  std::vector<double> last_good = params;
  std::vector<double> best;
  best.reserve(static_cast<std::size_t>(epochs) + 1);
  const int first_epoch = history.empty() ? 0 : history.back().epoch + 1;
  for (int e = 0; e <= epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const LossRecord rec = eval(params, grad, first_epoch + e);
    if (!std::isfinite(rec.total) || rec.total > cfg.divergence_threshold) {
      out.stop = StopReason::kDiverged;
      out.message = "loss " + format_sig12(rec.total) + " at epoch " +
                    std::to_string(first_epoch + e) + " exceeds the divergence threshold " +
                    format_sig12(cfg.divergence_threshold) + "; returning the last good snapshot";
      params = last_good;
      if (e == 0) history.push_back(rec);
      return out;
    }
    history.push_back(rec);
    best.push_back(best.empty() ? rec.total : std::min(best.back(), rec.total));
    if (e == epochs) break;
    const int w = cfg.early_stop_window;
    if (w > 0 && e >= w && best[static_cast<std::size_t>(e - w)] - best.back() < cfg.early_stop_tol) {
      out.stop = StopReason::kEarlyStop;
      out.message = "loss improved by less than " + format_sig12(cfg.early_stop_tol) + " over " +
                    std::to_string(w) + " epochs";
      return out;
    }
    for (double g : grad) {
      if (!std::isfinite(g)) {
        out.stop = StopReason::kDiverged;
        out.message = "non-finite gradient at epoch " + std::to_string(first_epoch + e);
        return out;
      }
    }
    last_good = params;
    for (std::size_t k = 0; k < grad.size(); ++k) {
      if (!frozen.empty() && frozen[k]) grad[k] = 0.0;
    }
    state.learning_rate = decay_every > 0 ? lr0 * std::pow(decay_factor, e / decay_every) : lr0;
    adam_step(state, params, grad);
  }
  return out;
}

// Levenberg-Marquardt on a small parameter vector. `residuals(params, r, J)`
// fills the residual vector and, when J is non-null, its Jacobian. The cost
// is |r|^2 / n.
template <typename Residuals>
void levenberg_marquardt(std::vector<double>& params, const std::vector<bool>& frozen, int iters,
                         Residuals&& residuals, std::vector<LossRecord>& history) {
  if (iters <= 0) return;
  const std::size_t np = params.size();
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < np; ++k) {
    if (frozen.empty() || !frozen[k]) active.push_back(k);
  }
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(params, r, &jac);
  double cost = r.squaredNorm() / static_cast<double>(r.size());
  double damping = 1e-3;
  int epoch = history.empty() ? 0 : history.back().epoch + 1;
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd ja(jac.rows(), na);
    for (Eigen::Index c = 0; c < na; ++c) ja.col(c) = jac.col(static_cast<Eigen::Index>(active[c]));
    const Eigen::MatrixXd jtj = ja.transpose() * ja;
    const Eigen::VectorXd jtr = ja.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 20 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index c = 0; c < na; ++c) a(c, c) += damping * std::max(jtj(c, c), 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-jtr);
      std::vector<double> trial = params;
      for (Eigen::Index c = 0; c < na; ++c) trial[active[c]] += step(c);
      Eigen::VectorXd r_trial;
      residuals(trial, r_trial, nullptr);
      const double trial_cost = r_trial.squaredNorm() / static_cast<double>(r_trial.size());
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        params = trial;
        damping = std::max(damping * 0.3, 1e-12);
        accepted = true;
      } else {
        damping *= 10.0;
      }
    }
    residuals(params, r, &jac);
    cost = r.squaredNorm() / static_cast<double>(r.size());
    history.push_back({epoch++, cost, 0.0, cost});
    if (!accepted) break;
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }
double softplus_d(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return softplus_d(x); }
double logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

// Final diagnostics shared by every driver.
void fill_report(CalibrationReport& rep, const Dataset& ds, const TermFunction& fn) {
  rep.dates = ds.dates;
  rep.tenors = ds.tenors;
  const std::size_t nt = ds.tenors.size();
  const std::size_t nd = ds.dates.size();
  rep.term_samples.resize(nd * nt);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t k = 0; k < nt; ++k) rep.term_samples[d * nt + k] = fn(ds.dates[d], ds.tenors[k]);
  }
  std::vector<double> tenor_sse(nt, 0.0), tenor_iv_sse(nt, 0.0), date_sse(nd, 0.0);
  std::vector<std::size_t> tenor_n(nt, 0), tenor_iv_n(nt, 0), date_n(nd, 0);
  double all_sse = 0.0, all_iv_sse = 0.0;
  std::size_t all_n = 0, all_iv_n = 0;
  for (const Slice& s : ds.slices) {
    const TermPoint& p = rep.term_samples[s.date_index * nt + s.tenor_index];
    const SlicePricer<double> pr(p.sigma, p.alpha, p.beta, s.tenor, ds.conv);
    for (std::size_t j = 0; j < ds.moneyness.size(); ++j) {
      if (std::isnan(s.price[j])) continue;
      const double c = pr.call(ds.moneyness[j]);
      const double e2 = (c - s.price[j]) * (c - s.price[j]);
      tenor_sse[s.tenor_index] += e2;
      ++tenor_n[s.tenor_index];
      date_sse[s.date_index] += e2;
      ++date_n[s.date_index];
      all_sse += e2;
      ++all_n;
      if (std::isnan(s.iv[j])) continue;
      const double v = model_iv(c, ds.moneyness[j], s.tenor, ds.conv, nullptr);
      tenor_iv_sse[s.tenor_index] += (v - s.iv[j]) * (v - s.iv[j]);
      ++tenor_iv_n[s.tenor_index];
      all_iv_sse += (v - s.iv[j]) * (v - s.iv[j]);
      ++all_iv_n;
    }
  }
  auto ratio = [](double a, std::size_t n) { return n ? a / static_cast<double>(n) : kNaN; };
  rep.per_tenor_mse.resize(nt);
  rep.per_tenor_iv_mse.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    rep.per_tenor_mse[k] = ratio(tenor_sse[k], tenor_n[k]);
    rep.per_tenor_iv_mse[k] = ratio(tenor_iv_sse[k], tenor_iv_n[k]);
  }
  rep.per_date_mse.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) rep.per_date_mse[d] = ratio(date_sse[d], date_n[d]);
  rep.price_mse = ratio(all_sse, all_n);
  rep.iv_mse = ratio(all_iv_sse, all_iv_n);

  static const double kTableTenors[] = {0.05, 0.1, 0.25, 0.5, 1.0, 2.0};
  for (double want : kTableTenors) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < nt; ++k) {
      if (std::fabs(ds.tenors[k] - want) < std::fabs(ds.tenors[best] - want)) best = k;
    }
    rep.mse_table.push_back(
        {format_sig12(want), ds.tenors[best], rep.per_tenor_mse[best], rep.per_tenor_iv_mse[best]});
  }
  rep.mse_table.push_back({"All", 0.0, rep.price_mse, rep.iv_mse});
  rep.feasibility = feasibility_report(fn, ds.tenors, ds.dates);
  rep.warnings.insert(rep.warnings.end(), ds.warnings.begin(), ds.warnings.end());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SurfaceSequence as_sequence(const VolSurface& s) {
  SurfaceSequence seq;
  seq.surfaces.push_back(s);
  return seq;
}

CalibrationResult train_neural(const SurfaceSequence& data, const CalibrationConfig& config,
                               const Architecture& arch, bool dynamic, const char* model) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const Dataset ds = build_dataset(data, config.target);
  NeuralTerm term = NeuralTerm::create(dynamic, arch.hidden, arch.activation, config.seed);
  NeuralProblem problem(ds, penalty_grid(data, config, dynamic), config.lambda, dynamic);

  CalibrationReport rep;
  rep.model = model;
  rep.config = config_to_json(config);
  rep.config["architecture"] = architecture_to_json(arch);

  std::vector<double> params(term.net.params().begin(), term.net.params().end());
  auto eval = [&](const std::vector<double>& p, std::vector<double>& g, int epoch) {
    std::copy(p.begin(), p.end(), term.net.params().begin());
    const NeuralLoss l = problem.evaluate(term.net, g);
    return LossRecord{epoch, l.pricing, l.constraint, l.total};
  };
  const TrainOutcome res = run_adam(params, {}, config.epochs, config.learning_rate,
                                    config.decay_every, config.decay_factor, config, eval,
                                    rep.loss_history);
  std::copy(params.begin(), params.end(), term.net.params().begin());
  rep.stop = res.stop;
  rep.message = res.message;
  if (res.stop != StopReason::kDiverged) {
    neural_polish(problem, term.net, config.polish_iterations, rep.loss_history);
  }
  fill_report(rep, ds, as_function(term));
  rep.wall_clock_seconds = seconds_since(t0);
  return {term, std::move(rep)};
}

}  // namespace

PenaltyGrid penalty_grid(const SurfaceSequence& data, const CalibrationConfig& config,
                         bool dynamic) {
  if (data.empty()) throw InvalidArgument("penalty_grid: no surfaces");
  const auto& tenors = data.surfaces.front().tenors;
  PenaltyGrid g;
  g.tenors = linspace(tenors.front(), tenors.back(), config.penalty_tenors);
  if (tenors.size() == 1) g.tenors = {tenors.front()};
  const double t0 = data.surfaces.front().date.value_or(0.0);
  const double t1 = data.surfaces.back().date.value_or(0.0);
  if (!dynamic) {
    g.dates = {0.0};
  } else if (data.surfaces.size() == 1) {
    g.dates = {0.0};
  } else {
    g.dates = linspace(0.0, t1 - t0, config.penalty_dates);
  }
  return g;
}

double loss_pricing(const TermStructure& term, const SurfaceSequence& data, TargetKind target) {
  const Dataset ds = build_dataset(data, target);
  std::vector<TermPoint> points;
  for (const Slice& s : ds.slices) points.push_back(eval_term(term, s.date, s.tenor));
  std::vector<SliceResult> r;
  evaluate_slices(ds, points, false, r);
  return pooled_loss(ds, r);
}

double loss_pricing(const TermStructure& term, const VolSurface& data, TargetKind target) {
  return loss_pricing(term, as_sequence(data), target);
}

double loss_constraint(const NeuralTerm& term, const std::vector<double>& tenors,
                       const std::vector<double>& dates) {
  term.validate();
  if (tenors.empty()) throw InvalidArgument("loss_constraint: empty tenor grid");
  const std::vector<double> ds = term.dynamic() ? dates : std::vector<double>{0.0};
  if (ds.empty()) throw InvalidArgument("loss_constraint: empty date grid");
  double sum = 0.0;
  for (double t : ds) {
    for (double tau : tenors) {
      const auto in = net_input(term.dynamic(), t, tau);
      const TenorDerivatives d = tenor_derivatives(term, in);
      if (d.sigma_underflow) {
        sum += 1.0;
        continue;
      }
      sum += std::max(d.d_alpha_over_sigma, 0.0) + std::max(d.d_beta_over_sigma, 0.0) +
             std::max(-d.d_sigma, 0.0);
    }
  }
  return sum / static_cast<double>(ds.size() * tenors.size());
}

NeuralLoss neural_loss(const NeuralTerm& term, const SurfaceSequence& data,
                       const CalibrationConfig& config, bool with_gradient) {
  term.validate();
  config.validate();
  const Dataset ds = build_dataset(data, config.target);
  NeuralProblem problem(ds, penalty_grid(data, config, term.dynamic()), config.lambda,
                        term.dynamic());
  std::vector<double> grad(with_gradient ? term.net.num_params() : 0, 0.0);
  NeuralLoss out = problem.evaluate(term.net, grad);
  out.gradient = std::move(grad);
  return out;
}

CalibrationResult calibrate_neural(const VolSurface& surface, const CalibrationConfig& config,
                                   const Architecture& arch) {
  return train_neural(as_sequence(surface), config, arch, false, "neural");
}

CalibrationResult calibrate_sequence(const SurfaceSequence& surfaces,
                                     const CalibrationConfig& config, const Architecture& arch) {
  if (surfaces.empty()) throw InvalidArgument("calibrate_sequence: empty sequence");
  return train_neural(surfaces, config, arch, true, "neural_dynamic");
}

CalibrationResult calibrate_parametric(const VolSurface& surface, const CalibrationConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const SurfaceSequence seq = as_sequence(surface);
  const Dataset ds = build_dataset(seq, config.target);

  ParametricTerm start;
  if (config.initial) {
    start = *config.initial;
  } else {
    start = ParametricTerm::eq24();
    start.kinds = config.kinds;
    auto c = start.coefficients();
    const auto u0 = start.used();
    for (std::size_t i = 0; i < c.size(); ++i)
      if (u0[i]) c[i] *= 0.9;
    start.set_coefficients(c);
  }
  start.kinds = config.kinds;
  start.validate();
  const auto used = start.used();

  // u -> coefficient: softplus for positive coefficients, sigmoid for H0.
  std::vector<double> u(kNumParametric);
  std::vector<bool> frozen(kNumParametric);
  {
    const auto c = start.coefficients();
    for (std::size_t i = 0; i < kNumParametric; ++i) {
      u[i] = i == kH0 ? logit(c[i]) : softplus_inv(c[i]);
      frozen[i] = !used[i];
    }
  }
  using D8 = Dual<kNumParametric>;
  auto coefficients = [&](const std::vector<double>& raw) {
    std::array<D8, kNumParametric> c;
    for (std::size_t i = 0; i < kNumParametric; ++i) {
      if (i == kH0) {
        const double s = sigmoid(raw[i]);
        c[i] = D8::variable(s, i);
        c[i].d[i] = s * (1.0 - s);
      } else {
        c[i] = D8::variable(softplus(raw[i]), i);
        c[i].d[i] = softplus_d(raw[i]);
      }
    }
    return c;
  };
  auto to_term = [&](const std::vector<double>& raw) {
    ParametricTerm p = start;
    const auto c = coefficients(raw);
    // unused coefficients keep their exact starting value
    std::array<double, kNumParametric> v = start.coefficients();
    for (std::size_t i = 0; i < kNumParametric; ++i)
      if (!frozen[i]) v[i] = c[i].v;
    p.set_coefficients(v);
    return p;
  };

  // The forms per slice, with derivatives in u.
  auto forms = [&](const std::vector<double>& raw) {
    const auto c = coefficients(raw);
    std::vector<std::array<D8, 3>> out;
    out.reserve(ds.slices.size());
    for (const Slice& s : ds.slices) out.push_back(detail::eval_parametric_forms(config.kinds, c, s.tenor));
    return out;
  };

  CalibrationReport rep;
  rep.model = "parametric";
  rep.config = config_to_json(config);

  std::vector<TermPoint> points(ds.slices.size());
  std::vector<SliceResult> results;
  const double inv_n = 1.0 / static_cast<double>(ds.present);
  auto eval = [&](const std::vector<double>& raw, std::vector<double>& g, int epoch) {
    const auto f = forms(raw);
    for (std::size_t i = 0; i < f.size(); ++i) points[i] = {f[i][0].v, f[i][1].v, f[i][2].v};
    evaluate_slices(ds, points, true, results);
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t k = 0; k < kNumParametric; ++k) {
        g[k] += inv_n * (results[i].grad[0] * f[i][0].d[k] + results[i].grad[1] * f[i][1].d[k] +
                         results[i].grad[2] * f[i][2].d[k]);
      }
    }
    const double lp = pooled_loss(ds, results);
    return LossRecord{epoch, lp, 0.0, lp};
  };
  const TrainOutcome res = run_adam(u, frozen, config.epochs, config.learning_rate,
                                    config.decay_every, config.decay_factor, config, eval,
                                    rep.loss_history);
  rep.stop = res.stop;
  rep.message = res.message;

  if (res.stop != StopReason::kDiverged && config.polish_iterations > 0) {
    auto residuals = [&](const std::vector<double>& raw, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
      const auto f = forms(raw);
      r.resize(static_cast<Eigen::Index>(ds.present));
      if (jac) jac->setZero(static_cast<Eigen::Index>(ds.present), kNumParametric);
      Eigen::Index row = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const Slice& s = ds.slices[i];
        if (s.present == 0) continue;
        const TermPoint p{f[i][0].v, f[i][1].v, f[i][2].v};
        for_each_residual(s, ds, p, jac != nullptr,
                          [&](std::size_t, double res, const std::array<double, 3>& d) {
                            r(row) = res;
                            if (jac) {
                              for (std::size_t k = 0; k < kNumParametric; ++k) {
                                (*jac)(row, static_cast<Eigen::Index>(k)) =
                                    d[0] * f[i][0].d[k] + d[1] * f[i][1].d[k] + d[2] * f[i][2].d[k];
                              }
                            }
                            ++row;
                          });
      }
    };
    levenberg_marquardt(u, frozen, config.polish_iterations, residuals, rep.loss_history);
  }

  const ParametricTerm fitted = to_term(u);
  rep.parametric = fitted;
  fill_report(rep, ds, as_function(fitted));
  rep.wall_clock_seconds = seconds_since(t0);
  return {fitted, std::move(rep)};
}

CalibrationResult calibrate_slicewise(const VolSurface& surface, const CalibrationConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const SurfaceSequence seq = as_sequence(surface);
  Dataset all = build_dataset(seq, config.target);

  CalibrationReport rep;
  rep.model = "slicewise";
  rep.config = config_to_json(config);

  // Keep slices with at least 3 target quotes.
  Dataset ds = all;
  ds.slices.clear();
  ds.present = 0;
  for (const Slice& s : all.slices) {
    if (s.present < 3) {
      rep.warnings.push_back("tenor " + format_sig12(s.tenor) + " skipped: " +
                             std::to_string(s.present) + " usable strikes (< 3)");
      continue;
    }
    ds.present += s.present;
    ds.slices.push_back(s);
  }
  if (ds.slices.size() < 2) {
    throw InvalidArgument("calibrate_slicewise: a slice-wise structure needs at least 2 tenors with 3 or more strikes");
  }

  // Per slice: sigma = sp(u0), alpha = sp(u1), beta = sigma + sp(u2).
  const std::size_t ns = ds.slices.size();
  std::vector<double> u(3 * ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const Slice& s = ds.slices[i];
    std::size_t atm = 0;
    double iv = 0.2;
    for (std::size_t j = 0; j < ds.moneyness.size(); ++j) {
      if (std::isnan(s.iv[j])) continue;
      if (std::isnan(s.iv[atm]) || std::fabs(ds.moneyness[j] - 1.0) < std::fabs(ds.moneyness[atm] - 1.0)) {
        atm = j;
      }
    }
    if (!std::isnan(s.iv[atm])) iv = s.iv[atm];
    // logistic scale matching the Black-Scholes standard deviation
    const double sigma = std::max(iv * std::sqrt(s.tenor) * std::sqrt(3.0) / M_PI, 1e-4);
    u[3 * i] = softplus_inv(sigma);
    u[3 * i + 1] = softplus_inv(1.0);
    u[3 * i + 2] = softplus_inv(1.0);
  }
  auto point_of = [](const double* v) {
    const double s = softplus(v[0]);
    return TermPoint{s, softplus(v[1]), s + softplus(v[2])};
  };

  std::vector<TermPoint> points(ns);
  std::vector<SliceResult> results;
  const double inv_n = 1.0 / static_cast<double>(ds.present);
  auto eval = [&](const std::vector<double>& raw, std::vector<double>& g, int epoch) {
    for (std::size_t i = 0; i < ns; ++i) points[i] = point_of(&raw[3 * i]);
    evaluate_slices(ds, points, true, results);
    for (std::size_t i = 0; i < ns; ++i) {
      const auto& gr = results[i].grad;
      g[3 * i] = inv_n * (gr[0] + gr[2]) * softplus_d(raw[3 * i]);
      g[3 * i + 1] = inv_n * gr[1] * softplus_d(raw[3 * i + 1]);
      g[3 * i + 2] = inv_n * gr[2] * softplus_d(raw[3 * i + 2]);
    }
    const double lp = pooled_loss(ds, results);
    return LossRecord{epoch, lp, 0.0, lp};
  };
  // Slices are independent and Adam is element-wise, so one pooled run is the
  // same as one run per slice. The rate halves every fifth of the budget.
  const int decay = std::max(config.slice_epochs / 5, 1);
  const TrainOutcome res = run_adam(u, {}, config.slice_epochs, config.slice_learning_rate, decay,
                                    0.5, config, eval, rep.loss_history);
  rep.stop = res.stop;
  rep.message = res.message;

  if (res.stop != StopReason::kDiverged && config.polish_iterations > 0) {
    // Block-diagonal problem: polish each slice on its own.
    std::vector<LossRecord> scratch;
    for (std::size_t i = 0; i < ns; ++i) {
      const Slice& s = ds.slices[i];
      std::vector<double> v(u.begin() + 3 * i, u.begin() + 3 * i + 3);
      auto residuals = [&](const std::vector<double>& raw, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const TermPoint p = point_of(raw.data());
        r.resize(static_cast<Eigen::Index>(s.present));
        if (jac) jac->setZero(static_cast<Eigen::Index>(s.present), 3);
        const double d0 = softplus_d(raw[0]), d1 = softplus_d(raw[1]), d2 = softplus_d(raw[2]);
        Eigen::Index row = 0;
        for_each_residual(s, ds, p, jac != nullptr,
                          [&](std::size_t, double res, const std::array<double, 3>& d) {
                            r(row) = res;
                            if (jac) {
                              (*jac)(row, 0) = (d[0] + d[2]) * d0;
                              (*jac)(row, 1) = d[1] * d1;
                              (*jac)(row, 2) = d[2] * d2;
                            }
                            ++row;
                          });
      };
      levenberg_marquardt(v, {}, config.polish_iterations, residuals, scratch);
      std::copy(v.begin(), v.end(), u.begin() + 3 * i);
    }
    for (std::size_t i = 0; i < ns; ++i) points[i] = point_of(&u[3 * i]);
    evaluate_slices(ds, points, false, results);
    const double lp = pooled_loss(ds, results);
    const int epoch = rep.loss_history.empty() ? 0 : rep.loss_history.back().epoch + 1;
    rep.loss_history.push_back({epoch, lp, 0.0, lp});
  }

  SlicewiseTerm term;
  for (std::size_t i = 0; i < ns; ++i) {
    term.tenors.push_back(ds.slices[i].tenor);
    term.knots.push_back(point_of(&u[3 * i]));
  }
  term.validate();
  fill_report(rep, all, as_function(term));
  rep.feasibility = feasibility_report(as_function(term), term.tenors, {0.0});
  rep.wall_clock_seconds = seconds_since(t0);
  return {term, std::move(rep)};
}

nlohmann::json report_to_json(const CalibrationReport& r, bool with_timing) {
  nlohmann::json j;
  j["model"] = r.model;
  j["config"] = r.config;
  j["stop_reason"] = to_string(r.stop);
  j["message"] = r.message;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.loss_history) {
    hist.push_back({{"epoch", h.epoch},
                    {"L_P", json_number(h.pricing)},
                    {"L_C", json_number(h.constraint)},
                    {"L", json_number(h.total)}});
  }
  j["loss_history"] = std::move(hist);
  if (!r.loss_history.empty()) {
    const auto& last = r.loss_history.back();
    j["final"] = {{"epoch", last.epoch},
                  {"L_P", json_number(last.pricing)},
                  {"L_C", json_number(last.constraint)},
                  {"L", json_number(last.total)},
                  {"price_mse", json_number(r.price_mse)},
                  {"iv_mse", json_number(r.iv_mse)}};
  }
  nlohmann::json per_tenor = nlohmann::json::object();
  nlohmann::json per_tenor_iv = nlohmann::json::object();
  for (std::size_t k = 0; k < r.tenors.size(); ++k) {
    per_tenor[format_shortest(r.tenors[k])] = json_number(r.per_tenor_mse[k]);
    per_tenor_iv[format_shortest(r.tenors[k])] = json_number(r.per_tenor_iv_mse[k]);
  }
  j["per_tenor_mse"] = std::move(per_tenor);
  j["per_tenor_iv_mse"] = std::move(per_tenor_iv);
  nlohmann::json per_date = nlohmann::json::array();
  for (std::size_t d = 0; d < r.dates.size(); ++d) {
    per_date.push_back({{"date", r.dates[d]}, {"price_mse", json_number(r.per_date_mse[d])}});
  }
  j["per_date_mse"] = std::move(per_date);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : r.mse_table) {
    table.push_back({{"tenor", row.label},
                     {"data_tenor", row.label == "All" ? nlohmann::json(nullptr) : nlohmann::json(row.tenor)},
                     {"price_mse", json_number(row.price_mse)},
                     {"iv_mse", json_number(row.iv_mse)}});
  }
  j["mse_table"] = std::move(table);
  j["feasibility"] = feasibility_to_json(r.feasibility);
  nlohmann::json samples = nlohmann::json::array();
  const std::size_t nt = r.tenors.size();
  for (std::size_t i = 0; i < r.term_samples.size(); ++i) {
    const auto& p = r.term_samples[i];
    samples.push_back({{"date", r.dates[i / nt]},
                       {"tenor", r.tenors[i % nt]},
                       {"sigma", json_number(p.sigma)},
                       {"alpha", json_number(p.alpha)},
                       {"beta", json_number(p.beta)}});
  }
  j["term_samples"] = std::move(samples);
  if (r.parametric) j["parameters"] = term_to_json(*r.parametric);
  j["warnings"] = r.warnings;
  if (with_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

}  // namespace alp

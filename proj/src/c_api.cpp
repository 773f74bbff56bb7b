#include "alp/alp.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "alp/calibration.hpp"
#include "alp/checks.hpp"
#include "alp/errors.hpp"
#include "alp/format.hpp"
#include "alp/pricing.hpp"
#include "alp/surfaces.hpp"
#include "alp/term_structures.hpp"

struct alp_surfaces {
  alp::SurfaceSequence seq;
};

struct alp_term {
  alp::TermStructure term;
};

struct alp_report {
  alp::CalibrationReport report;
};

namespace {

thread_local std::string g_error;
thread_local double g_error_tenor = std::numeric_limits<double>::quiet_NaN();

alp_status fail(alp_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes and the thread-local message.
template <typename F>
alp_status guard(F&& f) {
  g_error.clear();
  g_error_tenor = std::numeric_limits<double>::quiet_NaN();
  try {
    f();
    return ALP_OK;
  } catch (const alp::InfeasibleError& e) {
    g_error_tenor = e.tenor();
    return fail(ALP_E_INFEASIBLE, e.what());
  } catch (const alp::Error& e) {
    return fail(static_cast<alp_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ALP_E_SCHEMA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ALP_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ALP_E_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (!p) throw alp::InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<double> to_vector(const double* p, std::size_t n, const char* what) {
  if (n > 0) require(p, what);
  return n ? std::vector<double>(p, p + n) : std::vector<double>{};
}

alp::SurfaceKind to_kind(alp_quote_kind k) {
  switch (k) {
    case ALP_CALL_PRICE: return alp::SurfaceKind::kCallPrice;
    case ALP_IMPLIED_VOL: return alp::SurfaceKind::kImpliedVol;
  }
  throw alp::InvalidArgument("unknown quote kind");
}

alp::MarketConvention convention(double spot, double rate) {
  alp::MarketConvention c{spot, rate};
  c.validate();
  return c;
}

void put_warnings(char** out, const std::vector<std::string>& w) {
  if (out) *out = dup_string(nlohmann::json(w).dump());
}

}  // namespace

extern "C" {

const char* alp_version(void) { return "0.1.0"; }

const char* alp_last_error(void) { return g_error.c_str(); }

double alp_last_error_tenor(void) { return g_error_tenor; }

void alp_string_free(char* s) { std::free(s); }

alp_status alp_set_num_threads(int n) {
  return guard([&] {
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
#else
    (void)n;
#endif
  });
}

alp_status alp_grid(const char* name, const double** moneyness, size_t* n_moneyness,
                    const double** tenors, size_t* n_tenors) {
  return guard([&] {
    require(name, "name");
    require(moneyness, "moneyness");
    require(n_moneyness, "n_moneyness");
    require(tenors, "tenors");
    require(n_tenors, "n_tenors");
    static const std::vector<double> pm = alp::paper_moneyness_grid();
    static const std::vector<double> pt = alp::paper_tenor_grid();
    static const std::vector<double> cm = alp::coarse_moneyness_grid();
    static const std::vector<double> ct = alp::coarse_tenor_grid();
    const std::string n = name;
    const std::vector<double>* m;
    const std::vector<double>* t;
    if (n == "paper") {
      m = &pm;
      t = &pt;
    } else if (n == "coarse") {
      m = &cm;
      t = &ct;
    } else {
      throw alp::InvalidArgument("unknown grid '" + n + "' (expected paper or coarse)");
    }
    *moneyness = m->data();
    *n_moneyness = m->size();
    *tenors = t->data();
    *n_tenors = t->size();
  });
}

alp_status alp_term_preset(const char* name, alp_term** out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    if (std::string(name) != "eq24") {
      throw alp::InvalidArgument("unknown preset '" + std::string(name) + "'");
    }
    *out = new alp_term{alp::ParametricTerm::eq24()};
  });
}

alp_status alp_term_parametric(const double coefficients[8], const char* kinds, alp_term** out) {
  return guard([&] {
    require(coefficients, "coefficients");
    require(kinds, "kinds");
    require(out, "out");
    const std::string k = kinds;
    if (k.size() != 3 || k.find_first_not_of("ab") != std::string::npos) {
      throw alp::InvalidArgument("kinds must be three letters from {a, b}, e.g. \"abb\"");
    }
    auto form = [](char c) { return c == 'a' ? alp::FormKind::kSimple : alp::FormKind::kSophisticated; };
    alp::ParametricTerm p;
    p.kinds = {form(k[0]), form(k[1]), form(k[2])};
    std::array<double, alp::kNumParametric> c{};
    std::copy(coefficients, coefficients + alp::kNumParametric, c.begin());
    p.set_coefficients(c);
    try {
      p.validate();
    } catch (const alp::DomainError& e) {
      throw alp::InvalidArgument(e.what());
    }
    *out = new alp_term{p};
  });
}

alp_status alp_term_from_json(const char* json, alp_term** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      throw alp::SchemaError(std::string("term: ") + e.what());
    }
    *out = new alp_term{alp::term_from_json(j)};
  });
}

alp_status alp_term_to_json(const alp_term* term, char** out) {
  return guard([&] {
    require(term, "term");
    require(out, "out");
    *out = dup_string(alp::term_to_json(term->term).dump(2) + "\n");
  });
}

alp_status alp_term_is_dynamic(const alp_term* term, int* dynamic) {
  return guard([&] {
    require(term, "term");
    require(dynamic, "dynamic");
    const auto* n = std::get_if<alp::NeuralTerm>(&term->term);
    *dynamic = n && n->dynamic() ? 1 : 0;
  });
}

alp_status alp_term_eval(const alp_term* term, double t, double tau, double out[3]) {
  return guard([&] {
    require(term, "term");
    require(out, "out");
    const alp::TermPoint p = alp::eval_term(term->term, t, tau);
    out[0] = p.sigma;
    out[1] = p.alpha;
    out[2] = p.beta;
  });
}

alp_status alp_term_samples_csv(const alp_term* term, const double* tenors, size_t n_tenors,
                                const double* dates, size_t n_dates, char** out) {
  return guard([&] {
    require(term, "term");
    require(out, "out");
    *out = dup_string(alp::term_samples_csv(term->term, to_vector(tenors, n_tenors, "tenors"),
                                            to_vector(dates, n_dates, "dates")));
  });
}

alp_status alp_term_feasibility(const alp_term* term, const double* tenors, size_t n_tenors,
                                int* pass, char** json) {
  return guard([&] {
    require(term, "term");
    const alp::FeasibilityReport r =
        alp::feasibility_report(term->term, to_vector(tenors, n_tenors, "tenors"));
    if (pass) *pass = r.pass ? 1 : 0;
    if (json) *json = dup_string(alp::feasibility_to_json(r).dump(2) + "\n");
  });
}

void alp_term_free(alp_term* term) { delete term; }

alp_status alp_price(const alp_term* term, double t, double moneyness, double tenor, double spot,
                     double rate, alp_price_result* out) {
  return guard([&] {
    require(term, "term");
    require(out, "out");
    if (!(moneyness > 0.0) || !std::isfinite(moneyness)) {
      throw alp::DomainError("moneyness must be finite and > 0");
    }
    if (!(tenor > 0.0) || !std::isfinite(tenor)) throw alp::DomainError("tenor must be finite and > 0");
    const alp::MarketConvention conv = convention(spot, rate);
    const alp::TermPoint p = alp::eval_term(term->term, t, tenor);
    const alp::SlicePricer<double> pr(p.sigma, p.alpha, p.beta, tenor, conv);
    out->call = pr.call(moneyness);
    out->put = pr.put(moneyness);
    out->d = pr.d(moneyness);
    out->drift = pr.drift();
    out->parity_residual =
        out->call - out->put - conv.spot * (1.0 - moneyness * std::exp(-conv.rate * tenor));
  });
}

alp_status alp_synthesize(const alp_term* term, const double* moneyness, size_t n_moneyness,
                          const double* tenors, size_t n_tenors, double spot, double rate,
                          alp_quote_kind kind, alp_surfaces** out, char** warnings) {
  return guard([&] {
    require(term, "term");
    require(out, "out");
    alp::SynthesisResult r = alp::synthesize_surface(
        term->term, to_vector(moneyness, n_moneyness, "moneyness"),
        to_vector(tenors, n_tenors, "tenors"), convention(spot, rate), to_kind(kind));
    auto* s = new alp_surfaces;
    s->seq.surfaces.push_back(std::move(r.surface));
    put_warnings(warnings, r.warnings);
    *out = s;
  });
}

alp_status alp_synthesize_sequence(const char* path, const double* dates, size_t n_dates,
                                   const double* moneyness, size_t n_moneyness,
                                   const double* tenors, size_t n_tenors, double spot, double rate,
                                   alp_quote_kind kind, alp_surfaces** out, char** warnings) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    const std::string name = path;
    alp::ParametricPath p;
    if (name == "sin") {
      p = alp::sin_path();
    } else if (name == "constant") {
      p = [](double) { return alp::ParametricTerm::eq24(); };
    } else {
      throw alp::InvalidArgument("unknown path '" + name + "' (expected sin or constant)");
    }
    if (n_dates == 0) throw alp::InvalidArgument("at least one date is required");
    alp::SequenceSynthesis r = alp::synthesize_sequence(
        p, to_vector(dates, n_dates, "dates"), to_vector(moneyness, n_moneyness, "moneyness"),
        to_vector(tenors, n_tenors, "tenors"), convention(spot, rate), to_kind(kind));
    put_warnings(warnings, r.warnings);
    *out = new alp_surfaces{std::move(r.sequence)};
  });
}

alp_status alp_surfaces_fitted(const alp_term* term, const alp_surfaces* like, alp_surfaces** out,
                               char** warnings) {
  return guard([&] {
    require(term, "term");
    require(like, "like");
    require(out, "out");
    if (like->seq.empty()) throw alp::InvalidArgument("no surfaces");
    auto result = std::make_unique<alp_surfaces>();
    std::vector<std::string> w;
    const double t0 = like->seq.surfaces.front().date.value_or(0.0);
    for (const auto& s : like->seq.surfaces) {
      alp::SynthesisResult r = alp::synthesize_surface(term->term, s.moneyness, s.tenors,
                                                       s.convention, s.kind,
                                                       s.date.value_or(0.0) - t0);
      r.surface.date = s.date;
      w.insert(w.end(), r.warnings.begin(), r.warnings.end());
      result->seq.surfaces.push_back(std::move(r.surface));
    }
    put_warnings(warnings, w);
    *out = result.release();
  });
}

alp_status alp_surfaces_convert(const alp_surfaces* in, alp_quote_kind kind, alp_surfaces** out,
                                char** warnings) {
  return guard([&] {
    require(in, "in");
    require(out, "out");
    const alp::SurfaceKind want = to_kind(kind);
    auto result = std::make_unique<alp_surfaces>();
    std::vector<std::string> w;
    for (const auto& s : in->seq.surfaces) {
      if (s.kind == want) {
        result->seq.surfaces.push_back(s);
        continue;
      }
      alp::CellConversion c = want == alp::SurfaceKind::kImpliedVol ? alp::surface_prices_to_ivs(s)
                                                                     : alp::surface_ivs_to_prices(s);
      w.insert(w.end(), c.warnings.begin(), c.warnings.end());
      result->seq.surfaces.push_back(std::move(c.surface));
    }
    put_warnings(warnings, w);
    *out = result.release();
  });
}

alp_status alp_surfaces_load_csv(const char* path, double spot, double rate, alp_surfaces** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new alp_surfaces{alp::load_surface_csv(path, convention(spot, rate))};
  });
}

alp_status alp_surfaces_from_csv(const char* text, double spot, double rate, alp_surfaces** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = new alp_surfaces{alp::surface_from_csv(text, convention(spot, rate))};
  });
}

alp_status alp_surfaces_save_csv(const alp_surfaces* s, const char* path) {
  return guard([&] {
    require(s, "surfaces");
    require(path, "path");
    alp::save_surface_csv(s->seq, path);
  });
}

alp_status alp_surfaces_to_csv(const alp_surfaces* s, char** out) {
  return guard([&] {
    require(s, "surfaces");
    require(out, "out");
    *out = dup_string(alp::surface_to_csv(s->seq));
  });
}

alp_status alp_surfaces_to_json(const alp_surfaces* s, char** out) {
  return guard([&] {
    require(s, "surfaces");
    require(out, "out");
    *out = dup_string(alp::surface_to_json(s->seq).dump() + "\n");
  });
}

alp_status alp_surfaces_count(const alp_surfaces* s, size_t* n) {
  return guard([&] {
    require(s, "surfaces");
    require(n, "n");
    *n = s->seq.surfaces.size();
  });
}

void alp_surfaces_free(alp_surfaces* s) { delete s; }

alp_status alp_calibrate(const alp_surfaces* data, const char* model, const char* config_json,
                         alp_term** term, alp_report** report) {
  return guard([&] {
    require(data, "data");
    require(model, "model");
    require(term, "term");
    require(report, "report");
    alp::CalibrationConfig cfg;
    alp::Architecture arch;
    if (config_json && *config_json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::parse_error& e) {
        throw alp::InvalidArgument(std::string("config: ") + e.what());
      }
      try {
        alp::config_from_json(j, cfg, arch);
      } catch (const alp::SchemaError& e) {
        throw alp::InvalidArgument(e.what());
      }
    }
    if (data->seq.empty()) throw alp::InvalidArgument("no surfaces to calibrate");
    cfg.convention = data->seq.surfaces.front().convention;
    const std::string m = model;
    alp::CalibrationResult r;
    if (m == "sequence") {
      r = alp::calibrate_sequence(data->seq, cfg, arch);
    } else {
      if (data->seq.surfaces.size() != 1) {
        throw alp::InvalidArgument("model '" + m + "' takes a single surface; got " +
                                   std::to_string(data->seq.surfaces.size()));
      }
      const alp::VolSurface& s = data->seq.surfaces.front();
      if (m == "neural") {
        r = alp::calibrate_neural(s, cfg, arch);
      } else if (m == "parametric") {
        r = alp::calibrate_parametric(s, cfg);
      } else if (m == "slicewise") {
        r = alp::calibrate_slicewise(s, cfg);
      } else {
        throw alp::InvalidArgument("unknown model '" + m + "'");
      }
    }
    auto t = std::make_unique<alp_term>(alp_term{std::move(r.term)});
    *report = new alp_report{std::move(r.report)};
    *term = t.release();
  });
}

alp_status alp_report_to_json(const alp_report* r, int with_timing, char** out) {
  return guard([&] {
    require(r, "report");
    require(out, "out");
    *out = dup_string(alp::report_to_json(r->report, with_timing != 0).dump(2) + "\n");
  });
}

alp_status alp_report_term_csv(const alp_report* r, const alp_term* term, char** out) {
  return guard([&] {
    require(r, "report");
    require(term, "term");
    require(out, "out");
    const auto* n = std::get_if<alp::NeuralTerm>(&term->term);
    const bool dynamic = n && n->dynamic();
    *out = dup_string(alp::term_samples_csv(term->term, r->report.tenors,
                                            dynamic ? r->report.dates : std::vector<double>{}));
  });
}

alp_status alp_report_stop(const alp_report* r, alp_stop_reason* out) {
  return guard([&] {
    require(r, "report");
    require(out, "out");
    switch (r->report.stop) {
      case alp::StopReason::kEpochBudget: *out = ALP_STOP_EPOCH_BUDGET; break;
      case alp::StopReason::kEarlyStop: *out = ALP_STOP_EARLY; break;
      case alp::StopReason::kDiverged: *out = ALP_STOP_DIVERGED; break;
    }
  });
}

alp_status alp_report_final_loss(const alp_report* r, double out[3]) {
  return guard([&] {
    require(r, "report");
    require(out, "out");
    if (r->report.loss_history.empty()) throw alp::InvalidArgument("report has no loss records");
    const auto& h = r->report.loss_history.back();
    out[0] = h.pricing;
    out[1] = h.constraint;
    out[2] = h.total;
  });
}

void alp_report_free(alp_report* r) { delete r; }

alp_status alp_run_checks(const char* only, int* all_pass, char** json) {
  return guard([&] {
    std::vector<std::string> groups;
    if (only && *only) {
      std::stringstream ss(only);
      std::string g;
      while (std::getline(ss, g, ',')) {
        if (!g.empty()) groups.push_back(g);
      }
    }
    const auto results = alp::run_checks(groups);
    nlohmann::json arr = nlohmann::json::array();
    bool ok = true;
    for (const auto& r : results) {
      ok = ok && r.pass;
      arr.push_back({{"group", r.group},
                     {"name", r.name},
                     {"value", alp::json_number(r.value)},
                     {"tolerance", r.tolerance},
                     {"pass", r.pass}});
    }
    if (all_pass) *all_pass = ok ? 1 : 0;
    if (json) *json = dup_string(arr.dump(2) + "\n");
  });
}

alp_status alp_testing_set_drift_fault(int enabled) {
  return guard([&] { alp::testing::set_drift_sign_fault(enabled != 0); });
}

}  // extern "C"

#ifndef ALP_ALP_H
#define ALP_ALP_H

/* C interface to the additive logistic pricing library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call returns an alp_status; on failure alp_last_error() describes the
 * problem (thread-local, valid until the next call on the same thread).
 * Strings returned through char** are owned by the caller and released with
 * alp_string_free. */

#include <stddef.h>

#if defined(_WIN32)
#define ALP_API __declspec(dllexport)
#else
#define ALP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum alp_status {
  ALP_OK = 0,
  ALP_E_DOMAIN = 1,
  ALP_E_INVALID_ARGUMENT = 2,
  ALP_E_IO = 3,
  ALP_E_SCHEMA = 4,
  ALP_E_INFEASIBLE = 5,
  ALP_E_NUMERICAL = 6,
  ALP_E_DIVERGED = 7,
  ALP_E_ARBITRAGE = 8,
  ALP_E_INTERNAL = 99
} alp_status;

typedef enum alp_quote_kind { ALP_CALL_PRICE = 0, ALP_IMPLIED_VOL = 1 } alp_quote_kind;

typedef enum alp_stop_reason {
  ALP_STOP_EPOCH_BUDGET = 0,
  ALP_STOP_EARLY = 1,
  ALP_STOP_DIVERGED = 2
} alp_stop_reason;

typedef struct alp_surfaces alp_surfaces; /* one or more dated surfaces on a shared grid */
typedef struct alp_term alp_term;         /* parametric, slice-wise or neural term structure */
typedef struct alp_report alp_report;     /* calibration report */

typedef struct alp_price_result {
  double call;
  double put;
  double d;
  double drift; /* mu(tau) */
  double parity_residual;
} alp_price_result;

ALP_API const char* alp_version(void);
ALP_API const char* alp_last_error(void);
/* Tenor named by the last ALP_E_INFEASIBLE error, NaN otherwise. */
ALP_API double alp_last_error_tenor(void);
ALP_API void alp_string_free(char* s);
/* n <= 0 restores the OpenMP default. */
ALP_API alp_status alp_set_num_threads(int n);

/* Named grids: "paper" (50 x 100) and "coarse" (13 x 20). The arrays are
 * static and must not be freed. */
ALP_API alp_status alp_grid(const char* name, const double** moneyness, size_t* n_moneyness,
                            const double** tenors, size_t* n_tenors);

/* ---- term structures ---- */
/* "eq24". */
ALP_API alp_status alp_term_preset(const char* name, alp_term** out);
/* Coefficients in the order sigma0, sigma1, alpha0, alpha1, beta0, beta1, H0,
 * H1; kinds is "a" or "b" per component, e.g. "abb". Validated on creation. */
ALP_API alp_status alp_term_parametric(const double coefficients[8], const char* kinds,
                                       alp_term** out);
ALP_API alp_status alp_term_from_json(const char* json, alp_term** out);
ALP_API alp_status alp_term_to_json(const alp_term* term, char** out);
ALP_API alp_status alp_term_is_dynamic(const alp_term* term, int* dynamic);
/* out = {sigma, alpha, beta}; t is ignored unless the term is dynamic. */
ALP_API alp_status alp_term_eval(const alp_term* term, double t, double tau, double out[3]);
/* CSV [date_t,]tenor,sigma,alpha,beta; dates may be NULL for static terms. */
ALP_API alp_status alp_term_samples_csv(const alp_term* term, const double* tenors, size_t n_tenors,
                                        const double* dates, size_t n_dates, char** out);
ALP_API alp_status alp_term_feasibility(const alp_term* term, const double* tenors,
                                        size_t n_tenors, int* pass, char** json);
ALP_API void alp_term_free(alp_term* term);

/* ---- pricing ---- */
ALP_API alp_status alp_price(const alp_term* term, double t, double moneyness, double tenor,
                             double spot, double rate, alp_price_result* out);

/* ---- surfaces ---- */
/* warnings (nullable) receives a JSON array of strings. */
ALP_API alp_status alp_synthesize(const alp_term* term, const double* moneyness, size_t n_moneyness,
                                  const double* tenors, size_t n_tenors, double spot, double rate,
                                  alp_quote_kind kind, alp_surfaces** out, char** warnings);
/* path: "sin" (sigma0(t) = 0.15 + 0.03 sin(2 pi t)) or "constant", both on
 * eq24; dates strictly increasing. */
ALP_API alp_status alp_synthesize_sequence(const char* path, const double* dates, size_t n_dates,
                                           const double* moneyness, size_t n_moneyness,
                                           const double* tenors, size_t n_tenors, double spot,
                                           double rate, alp_quote_kind kind, alp_surfaces** out,
                                           char** warnings);
/* Model quotes of `term` on the grids, dates and quote kind of `like`; dynamic
 * terms are evaluated at dates relative to the first. */
ALP_API alp_status alp_surfaces_fitted(const alp_term* term, const alp_surfaces* like,
                                       alp_surfaces** out, char** warnings);
ALP_API alp_status alp_surfaces_convert(const alp_surfaces* in, alp_quote_kind kind,
                                        alp_surfaces** out, char** warnings);
ALP_API alp_status alp_surfaces_load_csv(const char* path, double spot, double rate,
                                         alp_surfaces** out);
ALP_API alp_status alp_surfaces_from_csv(const char* text, double spot, double rate,
                                         alp_surfaces** out);
ALP_API alp_status alp_surfaces_save_csv(const alp_surfaces* s, const char* path);
ALP_API alp_status alp_surfaces_to_csv(const alp_surfaces* s, char** out);
ALP_API alp_status alp_surfaces_to_json(const alp_surfaces* s, char** out);
ALP_API alp_status alp_surfaces_count(const alp_surfaces* s, size_t* n);
ALP_API void alp_surfaces_free(alp_surfaces* s);

/* ---- calibration ---- */
/* model: "neural", "parametric", "slicewise" (single surface) or "sequence"
 * (dynamic net over all dates). config_json may be NULL or a JSON object with
 * the keys of the report's "config" echo plus "architecture". A diverged run
 * still returns ALP_OK with a report whose stop reason is ALP_STOP_DIVERGED. */
ALP_API alp_status alp_calibrate(const alp_surfaces* data, const char* model,
                                 const char* config_json, alp_term** term, alp_report** report);
ALP_API alp_status alp_report_to_json(const alp_report* r, int with_timing, char** out);
/* Term samples on the report's data grid (dates included for dynamic terms). */
ALP_API alp_status alp_report_term_csv(const alp_report* r, const alp_term* term, char** out);
ALP_API alp_status alp_report_stop(const alp_report* r, alp_stop_reason* out);
/* out = {L_P, L_C, L} of the last record. */
ALP_API alp_status alp_report_final_loss(const alp_report* r, double out[3]);
ALP_API void alp_report_free(alp_report* r);

/* ---- invariant suite ---- */
/* only: comma-separated group names, NULL or "" for all. json receives an
 * array of {group, name, value, tolerance, pass}. */
ALP_API alp_status alp_run_checks(const char* only, int* all_pass, char** json);
/* Test hook: flips the sign of the martingale drift while enabled. */
ALP_API alp_status alp_testing_set_drift_fault(int enabled);

#ifdef __cplusplus
}
#endif

#endif /* ALP_ALP_H */

#ifndef GARCH_SSM_H
#define GARCH_SSM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum GssmStatus {
  GSSM_STATUS_OK = 0,
  GSSM_STATUS_NULL_POINTER = 1,
  GSSM_STATUS_INVALID_ARGUMENT = 2,
  GSSM_STATUS_DIMENSION = 3,
  GSSM_STATUS_NUMERICAL = 4,
  GSSM_STATUS_PARSE = 5,
  GSSM_STATUS_CONFIG = 6,
  GSSM_STATUS_IO = 7,
  GSSM_STATUS_INSUFFICIENT = 8,
  GSSM_STATUS_CHAIN_FAILED = 9,
  GSSM_STATUS_MISMATCH = 10,
  GSSM_STATUS_PANIC = 11,
} GssmStatus;

// State-space structure.
typedef enum GssmModelKind {
  // Random walk plus noise, `r = n`.
  GSSM_MODEL_KIND_RANDOM_WALK = 0,
  // Local linear trend per series, `r = 2n`.
  GSSM_MODEL_KIND_LOCAL_TREND = 1,
} GssmModelKind;

// Parsed run configuration.
typedef struct GssmConfig GssmConfig;

// Observed series.
typedef struct GssmData GssmData;

// Posterior draws of a completed fit.
typedef struct GssmFit GssmFit;

// Model specification with the diffuse initial-state prior.
typedef struct GssmModel GssmModel;

// CCC-GARCH(p, q) parameters: `alpha0[n]`, `alpha[n*p]` and `beta[n*q]`
// (series-major), correlation `corr[n*n]`.
typedef struct GssmGarch {
  size_t p;
  size_t q;
  const double *alpha0;
  const double *alpha;
  const double *beta;
  const double *corr;
} GssmGarch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
// The pointer stays valid until the next call into the library on the
// same thread.
const char *gssm_last_error(void);

// Library version as a static NUL-terminated string.
const char *gssm_version(void);

// `y` is `t_len × n`, row-major; `NaN` cells are missing.
//
// # Safety
// `y` must point to `t_len * n` readable doubles and `out` must be writable.
enum GssmStatus gssm_data_new(const double *y, size_t t_len, size_t n, struct GssmData **out);

// Read a series CSV (header row, optional time column, `NA` or empty for missing).
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
enum GssmStatus gssm_data_read_csv(const char *path, struct GssmData **out);

// # Safety
// `data` must be valid; `t_len` and `n` must be writable.
enum GssmStatus gssm_data_dims(const struct GssmData *data, size_t *t_len, size_t *n);

// # Safety
// `data` must come from this library and not be used afterwards. Null is a no-op.
void gssm_data_free(struct GssmData *data);

// # Safety
// `out` must be writable.
enum GssmStatus gssm_model_new(enum GssmModelKind kind, size_t n, struct GssmModel **out);

// # Safety
// `model` must be valid; `n` and `r` must be writable.
enum GssmStatus gssm_model_dims(const struct GssmModel *model, size_t *n, size_t *r);

// # Safety
// `model` must come from this library and not be used afterwards. Null is a no-op.
void gssm_model_free(struct GssmModel *model);

// Marginal log-likelihood of the GARCH state-space model. `w` is `r × r`;
// `pointwise`, if not null, receives the `t_len` per-time log predictive
// densities.
//
// # Safety
// Handles must be valid, buffers sized as documented, `loglik` writable.
enum GssmStatus gssm_loglik_garch(const struct GssmModel *model,
                                  const struct GssmData *data,
                                  const struct GssmGarch *garch,
                                  const double *w,
                                  double *loglik,
                                  double *pointwise);

// Marginal log-likelihood with constant observation covariance `v` (`n × n`).
//
// # Safety
// As [`gssm_loglik_garch`].
enum GssmStatus gssm_loglik_constant(const struct GssmModel *model,
                                     const struct GssmData *data,
                                     const double *v,
                                     const double *w,
                                     double *loglik,
                                     double *pointwise);

// Simulate `t_len` observations starting from `θ_0 = 0`. Writes `y_out`
// (`t_len × n`) and, if not null, `sigma_out` (`t_len × n`) and
// `states_out` (`(t_len + 1) × r`).
//
// # Safety
// Handles must be valid and output buffers sized as documented.
enum GssmStatus gssm_simulate(const struct GssmModel *model,
                              const struct GssmGarch *garch,
                              const double *w,
                              size_t t_len,
                              uint64_t seed,
                              double *y_out,
                              double *sigma_out,
                              double *states_out);

// WAIC from a `draws × t_len` row-major matrix of pointwise log predictive
// densities, on the higher-is-better scale.
//
// # Safety
// `lp` must hold `draws * t_len` doubles; outputs must be writable.
enum GssmStatus gssm_waic(const double *lp,
                          size_t draws,
                          size_t t_len,
                          double *waic_out,
                          double *lppd_out,
                          double *p_waic_out);

// Parse TOML configuration text. Relative paths resolve against `base_dir`
// (null means the current directory).
//
// # Safety
// Strings must be NUL-terminated; `out` must be writable.
enum GssmStatus gssm_config_parse(const char *text, const char *base_dir, struct GssmConfig **out);

// # Safety
// `config` must come from this library and not be used afterwards. Null is a no-op.
void gssm_config_free(struct GssmConfig *config);

// Run the sampler configured by `config` on `data`. Chains that stop early
// are reported through [`gssm_fit_failures`]; the call still succeeds if
// any draws were retained.
//
// # Safety
// Handles must be valid; `out` must be writable.
enum GssmStatus gssm_fit(const struct GssmConfig *config,
                         const struct GssmData *data,
                         struct GssmFit **out);

// Number of retained draws.
//
// # Safety
// `fit` must be valid or null (returns 0).
size_t gssm_fit_n_draws(const struct GssmFit *fit);

// Number of chains that stopped early.
//
// # Safety
// `fit` must be valid or null (returns 0).
size_t gssm_fit_failures(const struct GssmFit *fit);

// Number of named scalar parameters.
//
// # Safety
// `fit` must be valid or null (returns 0).
size_t gssm_fit_n_params(const struct GssmFit *fit);

// Name of parameter `k` (for example `alpha1[2]` or `W[1,1]`); null when
// out of range. Owned by the fit.
//
// # Safety
// `fit` must be valid or null.
const char *gssm_fit_param_name(const struct GssmFit *fit, size_t k);

// Copy the draws of parameter `k` into `out` (`gssm_fit_n_draws` values).
//
// # Safety
// `fit` must be valid and `out` must hold `len` doubles.
enum GssmStatus gssm_fit_param_draws(const struct GssmFit *fit, size_t k, double *out, size_t len);

// Posterior median and 95% interval of parameter `k`.
//
// # Safety
// `fit` must be valid; outputs must be writable.
enum GssmStatus gssm_fit_param_summary(const struct GssmFit *fit,
                                       size_t k,
                                       double *median,
                                       double *lo,
                                       double *hi);

// WAIC of the fit (higher is better) with its components.
//
// # Safety
// `fit` must be valid; outputs must be writable.
enum GssmStatus gssm_fit_waic(const struct GssmFit *fit,
                              double *waic_out,
                              double *lppd_out,
                              double *p_waic_out);

// 1 for a GARCH fit, 0 for the constant-covariance model.
//
// # Safety
// `fit` must be valid or null (returns 0).
int32_t gssm_fit_is_garch(const struct GssmFit *fit);

// # Safety
// `fit` must come from this library and not be used afterwards. Null is a no-op.
void gssm_fit_free(struct GssmFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GARCH_SSM_H */

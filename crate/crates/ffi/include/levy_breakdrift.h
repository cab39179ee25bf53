#ifndef LEVY_BREAKDRIFT_H
#define LEVY_BREAKDRIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every call.
typedef enum LbStatus {
  LB_STATUS_OK = 0,
  LB_STATUS_NULL_POINTER = 1,
  // Invalid parameters, unsupported regime or malformed job.
  LB_STATUS_DOMAIN = 2,
  // Quadrature, truncation or inversion did not reach the tolerance.
  LB_STATUS_CONVERGENCE = 3,
  LB_STATUS_PANIC = 4,
} LbStatus;

typedef enum LbScheme {
  LB_SCHEME_GRID = 0,
  LB_SCHEME_STICK_BREAKING = 1,
} LbScheme;

typedef enum LbSide {
  // Spectrally positive theorems.
  LB_SIDE_SP = 0,
  // Spectrally negative theorems.
  LB_SIDE_SN = 1,
} LbSide;

// Extra time after an exponential break in Laplace calls.
typedef enum LbVKind {
  LB_V_KIND_NONE = 0,
  LB_V_KIND_INFINITE = 1,
  // Exponential with rate `theta`.
  LB_V_KIND_EXPONENTIAL = 2,
} LbVKind;

// Opaque model handle.
typedef struct LbModel LbModel;

// Quadrature tolerances. Pass a null pointer for the defaults.
typedef struct LbQuadConfig {
  double abs_tol;
  double rel_tol;
  uintptr_t max_subdivisions;
} LbQuadConfig;

// Monte Carlo settings; `grid_step <= 0` picks the default step.
typedef struct LbMcConfig {
  uint64_t n_paths;
  double grid_step;
  uint64_t seed;
  bool antithetic;
  enum LbScheme scheme;
  double max_work;
} LbMcConfig;

typedef struct LbEstimate {
  double value;
  double err_est;
} LbEstimate;

typedef struct LbSupResult {
  double probability;
  double a_term;
  double b_term;
  double err_est;
} LbSupResult;

// Ruin probabilities; `crossing` is NaN when the ruin lines do not cross.
typedef struct LbRuinReport {
  double u1;
  double u2;
  double c1;
  double c2;
  double crossing;
  double psi1;
  double psi2;
  double psi_or;
  double psi_sim;
  double psi_and;
  double psi_and_raw;
} LbRuinReport;

typedef struct LbMcEstimate {
  double estimate;
  double std_error;
  uint64_t n_paths;
  // True when grid discretization biases the estimate downward.
  bool grid_bias_downward;
} LbMcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Standard Brownian motion.
enum LbStatus lb_model_brownian(struct LbModel **out);

// Gamma process, `X(t) ~ Gamma(shape t, rate delta)`.
enum LbStatus lb_model_gamma(double delta, struct LbModel **out);

// Totally skewed, zero-mean alpha-stable process, `1 < alpha < 2`.
enum LbStatus lb_model_stable(double alpha, struct LbModel **out);

// Releases a model handle. Null is ignored.
//
// # Safety
// `model` must come from an `lb_model_*` constructor and not be used afterwards.
void lb_model_free(struct LbModel *model);

// The default quadrature settings.
//
// # Safety
// `out` must be valid for writes.
enum LbStatus lb_quad_config_default(struct LbQuadConfig *out);

// The default Monte Carlo settings.
//
// # Safety
// `out` must be valid for writes.
enum LbStatus lb_mc_config_default(struct LbMcConfig *out);

// Density of `X(t)` at `x`.
//
// # Safety
// Pointers must be valid or null.
enum LbStatus lb_density(const struct LbModel *model, double x, double t, double *out);

// `P(sup_{t < horizon} (X(t) - c t) > u)`.
//
// # Safety
// Pointers must be valid or null (`cfg` may be null).
enum LbStatus lb_sup_linear(const struct LbModel *model,
                            double c,
                            double u,
                            double horizon_,
                            enum LbSide side,
                            const struct LbQuadConfig *cfg,
                            struct LbEstimate *out);

// Supremum over the broken line `u + c1 t` (`t < t_break`), `u + c1 t_break + c2 (t - t_break)`.
//
// # Safety
// Pointers must be valid or null (`cfg` may be null).
enum LbStatus lb_sup_broken(const struct LbModel *model,
                            double c1,
                            double c2,
                            double t_break,
                            double u,
                            double horizon_,
                            enum LbSide side,
                            const struct LbQuadConfig *cfg,
                            struct LbSupResult *out);

// Laplace transform of the supremum with an `Exp(lambda)` break time.
// With `LB_V_KIND_NONE` the supremum stops at the break and `c2`, `theta`
// are ignored.
//
// # Safety
// Pointers must be valid or null.
enum LbStatus lb_laplace_broken(const struct LbModel *model,
                                double c1,
                                double c2,
                                double lambda,
                                double gamma,
                                enum LbVKind v,
                                double theta,
                                double *out);

// Two-company ruin probabilities for claims `X` split as `delta1`, `delta2`.
//
// # Safety
// Pointers must be valid or null (`cfg` may be null).
enum LbStatus lb_ruin(const struct LbModel *model,
                      double x1,
                      double x2,
                      double p1,
                      double p2,
                      double delta1,
                      double delta2,
                      double horizon_,
                      const struct LbQuadConfig *cfg,
                      struct LbRuinReport *out);

// Monte Carlo estimate of the broken-drift supremum probability.
//
// # Safety
// Pointers must be valid or null.
enum LbStatus lb_mc_sup_broken(const struct LbModel *model,
                               double c1,
                               double c2,
                               double t_break,
                               double u,
                               double horizon_,
                               const struct LbMcConfig *cfg,
                               struct LbMcEstimate *out);

// Monte Carlo estimate of `P(sup_{t < horizon} (X(t) - c t) > u)`.
//
// # Safety
// Pointers must be valid or null.
enum LbStatus lb_mc_sup_linear(const struct LbModel *model,
                               double c,
                               double u,
                               double horizon_,
                               const struct LbMcConfig *cfg,
                               struct LbMcEstimate *out);

// Runs a JSON job (the format of the command-line tool) and returns its
// JSON Lines records in `*out`, to be released with [`lb_string_free`].
//
// # Safety
// `job_json` must be a NUL-terminated string; `out` must be valid for writes.
enum LbStatus lb_run_job_json(const char *job_json, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void lb_string_free(char *s);

// Message of the last failed call on this thread, or null. Valid until
// the next call on the same thread.
const char *lb_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *lb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVY_BREAKDRIFT_H */

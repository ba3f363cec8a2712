#ifndef OCTD_H
#define OCTD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OctdStability {
  OCTD_STABILITY_PARTIAL_ATTRACTOR = 0,
  OCTD_STABILITY_ATTRACTOR = 1,
  OCTD_STABILITY_UNSTABLE = 2,
  OCTD_STABILITY_CENTER = 3,
} OctdStability;

/*
 Status codes; the nonzero values match the command-line exit codes where
 both exist.
 */
typedef enum OctdStatus {
  OCTD_STATUS_OK = 0,
  OCTD_STATUS_NULL_POINTER = 1,
  OCTD_STATUS_INVALID_ARGUMENT = 2,
  OCTD_STATUS_NUMERIC_FAILURE = 3,
  OCTD_STATUS_LEAKAGE = 4,
  OCTD_STATUS_IO_FAILURE = 5,
  OCTD_STATUS_OUT_OF_RANGE = 6,
  OCTD_STATUS_PANIC = 7,
} OctdStatus;

typedef struct OctdEnsemble OctdEnsemble;

typedef struct OctdFixedPoints OctdFixedPoints;

typedef struct OctdTrajectory OctdTrajectory;

/*
 Model parameters. `n_max` is the number of Fock levels kept.
 */
typedef struct OctdParams {
  double omega_c;
  double j;
  double v;
  double lambda;
  double kappa;
  double spin;
  size_t n_max;
} OctdParams;

/*
 One fixed point: coordinates ordered `x, p, s1x, s1y, s1z, s2x, s2y, s2z`.
 */
typedef struct OctdFixedPoint {
  /*
   NUL-terminated label owned by the catalog handle.
   */
  const char *label;
  bool exists;
  double state[8];
  double residual;
  /*
   -1 when the point does not exist, otherwise the [`OctdStability`] value.
   */
  int32_t classification;
  size_t negative_count;
} OctdFixedPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or NULL. The pointer
 stays valid until the next octd call on the same thread.
 */
const char *octd_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *octd_version(void);

/*
 Defaults: `omega_c = j = 1`, all couplings zero, `S = 1`, two Fock levels.
 */
struct OctdParams octd_params_default(void);

/*
 Runs the experiment described by a TOML config (or manifest) into `out_dir`.

 # Safety
 Both arguments must be valid NUL-terminated strings.
 */
enum OctdStatus octd_run_config(const char *config_path, const char *out_dir);

/*
 Computes the seven-entry fixed-point catalog with stability data.

 # Safety
 `params` and `out` must be valid pointers.
 */
enum OctdStatus octd_fixed_points(const struct OctdParams *params, struct OctdFixedPoints **out);

/*
 # Safety
 `h` must come from [`octd_fixed_points`] or be NULL.
 */
size_t octd_fixed_points_len(const struct OctdFixedPoints *h);

/*
 # Safety
 `h` must come from [`octd_fixed_points`]; `out` must be writable.
 */
enum OctdStatus octd_fixed_points_get(const struct OctdFixedPoints *h,
                                      size_t index,
                                      struct OctdFixedPoint *out);

/*
 # Safety
 `h` must come from [`octd_fixed_points`] or be NULL; it is invalid afterwards.
 */
void octd_fixed_points_free(struct OctdFixedPoints *h);

/*
 Integrates the mean-field equations from `initial` (8 coordinates) and
 samples every `sample_dt` up to `t_end`.

 # Safety
 `params` must be valid, `initial` must point to 8 doubles, `out` writable.
 */
enum OctdStatus octd_classical_integrate(const struct OctdParams *params,
                                         const double *initial,
                                         double t_end,
                                         double sample_dt,
                                         struct OctdTrajectory **out);

/*
 # Safety
 `h` must come from [`octd_classical_integrate`] or be NULL.
 */
size_t octd_trajectory_len(const struct OctdTrajectory *h);

/*
 Sample times, `octd_trajectory_len` values, owned by the handle.

 # Safety
 `h` must come from [`octd_classical_integrate`] or be NULL.
 */
const double *octd_trajectory_times(const struct OctdTrajectory *h);

/*
 Row-major states, 8 values per sample, owned by the handle.

 # Safety
 `h` must come from [`octd_classical_integrate`] or be NULL.
 */
const double *octd_trajectory_states(const struct OctdTrajectory *h);

/*
 # Safety
 `h` must come from [`octd_classical_integrate`] or be NULL; it is invalid afterwards.
 */
void octd_trajectory_free(struct OctdTrajectory *h);

/*
 Quantum-jump ensemble from the product coherent state at
 `(x, p, theta1, phi1, theta2, phi2)`, recording the collective and phase
 observables at `n_samples` uniform times on `[0, t_end]`.

 # Safety
 `params` must be valid, `angles` must point to 6 doubles, `out` writable.
 */
enum OctdStatus octd_quantum_ensemble(const struct OctdParams *params,
                                      const double *angles,
                                      double t_end,
                                      size_t n_samples,
                                      size_t n_traj,
                                      uint64_t seed,
                                      struct OctdEnsemble **out);

/*
 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
size_t octd_ensemble_samples(const struct OctdEnsemble *h);

/*
 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
const double *octd_ensemble_times(const struct OctdEnsemble *h);

/*
 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
size_t octd_ensemble_label_count(const struct OctdEnsemble *h);

/*
 Observable label, or NULL when out of range.

 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
const char *octd_ensemble_label(const struct OctdEnsemble *h, size_t index);

/*
 Ensemble mean and standard error of observable `index`, one value per sample.

 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
const double *octd_ensemble_mean(const struct OctdEnsemble *h, size_t index);

/*
 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
const double *octd_ensemble_stderr(const struct OctdEnsemble *h, size_t index);

/*
 Largest top-Fock-level population seen in any trajectory.

 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL.
 */
double octd_ensemble_max_leakage(const struct OctdEnsemble *h);

/*
 # Safety
 `h` must come from [`octd_quantum_ensemble`] or be NULL; it is invalid afterwards.
 */
void octd_ensemble_free(struct OctdEnsemble *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCTD_H */

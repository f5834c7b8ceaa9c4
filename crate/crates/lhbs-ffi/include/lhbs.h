#ifndef LHBS_H
#define LHBS_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Zero is success; everything else identifies the failure.
 */
typedef enum LhbsStatus {
  LHBS_STATUS_OK = 0,
  LHBS_STATUS_NULL_ARGUMENT = 1,
  LHBS_STATUS_INVALID_UTF8 = 2,
  LHBS_STATUS_UNKNOWN_KEY = 3,
  LHBS_STATUS_INVALID_VALUE = 4,
  LHBS_STATUS_INVALID_CONFIG = 5,
  LHBS_STATUS_DETECTION_FAILED = 6,
  LHBS_STATUS_BOUND_UNAVAILABLE = 7,
} LhbsStatus;

/**
 * Opaque simulator handle holding the scenario, protocol and sweep knobs.
 */
typedef struct LhbsSim LhbsSim;

/**
 * Opaque sweep-result handle; read rows via [`lhbs_sweep_row`].
 */
typedef struct LhbsSweepResult LhbsSweepResult;

/**
 * One protocol round: estimates alongside ground truth.
 */
typedef struct LhbsTrialResult {
  /**
   * Angle available at the surface after phase 1, radians.
   */
  double phi_hat_hris;
  /**
   * Angle demodulated at the UE, radians.
   */
  double phi_demod;
  /**
   * Range estimate, meters.
   */
  double r_hat;
  /**
   * Position fix, meters.
   */
  double p_hat_x;
  double p_hat_y;
  /**
   * Ground truth.
   */
  double true_phi;
  double true_r;
  double true_p_x;
  double true_p_y;
  /**
   * Clock offset used in the trial, radians.
   */
  double epsilon;
  /**
   * Burst arrival-time estimates, seconds.
   */
  double t_rx1;
  double t_rx2;
} LhbsTrialResult;

/**
 * Cramér-Rao bounds at one SNR point.
 */
typedef struct LhbsCrlbReport {
  /**
   * Angle bound, rad^2.
   */
  double crlb_phi;
  /**
   * Range bound, m^2.
   */
  double crlb_r;
  /**
   * Off-diagonal Fisher coefficient, 1/(rad m).
   */
  double alpha;
  /**
   * Position bound, m^2.
   */
  double crlb_pos;
} LhbsCrlbReport;

/**
 * One aggregated sweep point.
 */
typedef struct LhbsSweepRow {
  double snr_db;
  double rmse_r;
  double rmse_phi;
  double rmse_pos;
  double sqrt_crlb_r;
  double sqrt_crlb_phi;
  double sqrt_crlb_pos;
  uint64_t failures;
  uint64_t trials;
} LhbsSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulator with the default scenario and protocol parameters.
 * Free with [`lhbs_sim_free`].
 */
struct LhbsSim *lhbs_sim_new(void);

/**
 * Releases a simulator handle. A null pointer is a no-op.
 *
 * # Safety
 * `sim` must be a pointer previously returned by [`lhbs_sim_new`] and not
 * yet freed.
 */
void lhbs_sim_free(struct LhbsSim *sim);

/**
 * Applies one configuration assignment, using the same keys and value
 * syntax as the config-file format (e.g. `"seq_len"`, `"150"`).
 *
 * # Safety
 * `sim` must be a live handle from [`lhbs_sim_new`]; `key` and `value`
 * must be NUL-terminated strings valid for the duration of the call.
 */
enum LhbsStatus lhbs_sim_set(struct LhbsSim *sim, const char *key, const char *value);

/**
 * Runs one seeded protocol round. On `Ok` the result struct is filled;
 * estimation failures (lost detection and the like) return
 * `DetectionFailed` without touching the output.
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to writable memory for
 * one [`LhbsTrialResult`].
 */
enum LhbsStatus lhbs_sim_trial(const struct LhbsSim *sim,
                               uint64_t seed,
                               struct LhbsTrialResult *out);

/**
 * Evaluates the Cramér-Rao bounds at one SNR point.
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to writable memory for
 * one [`LhbsCrlbReport`].
 */
enum LhbsStatus lhbs_sim_crlb(const struct LhbsSim *sim, double snr_db, struct LhbsCrlbReport *out);

/**
 * Runs the configured Monte Carlo sweep (grid, trial count and master
 * seed all come from the handle's configuration) and returns a result
 * handle. Free with [`lhbs_sweep_free`].
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to writable pointer
 * storage.
 */
enum LhbsStatus lhbs_sim_sweep(const struct LhbsSim *sim, struct LhbsSweepResult **out);

/**
 * Number of SNR points in a sweep result. Null yields zero.
 *
 * # Safety
 * `res`, when non-null, must be a live handle from [`lhbs_sim_sweep`].
 */
uintptr_t lhbs_sweep_len(const struct LhbsSweepResult *res);

/**
 * Copies one sweep row into `out`.
 *
 * # Safety
 * `res` must be a live handle from [`lhbs_sim_sweep`]; `out` must point
 * to writable memory for one [`LhbsSweepRow`].
 */
enum LhbsStatus lhbs_sweep_row(const struct LhbsSweepResult *res,
                               uintptr_t index,
                               struct LhbsSweepRow *out);

/**
 * Releases a sweep result. A null pointer is a no-op.
 *
 * # Safety
 * `res` must be a pointer previously returned by [`lhbs_sim_sweep`] and
 * not yet freed.
 */
void lhbs_sweep_free(struct LhbsSweepResult *res);

/**
 * Static description of a status code.
 */
const char *lhbs_status_message(enum LhbsStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LHBS_H */

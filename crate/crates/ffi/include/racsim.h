#ifndef RACSIM_H
#define RACSIM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RacsimStatus {
  RACSIM_STATUS_OK = 0,
  RACSIM_STATUS_NULL_POINTER = 1,
  RACSIM_STATUS_INVALID_ARGUMENT = 2,
  RACSIM_STATUS_INVALID_CONFIG = 3,
  RACSIM_STATUS_DIMENSION = 4,
  RACSIM_STATUS_INFEASIBLE = 5,
  RACSIM_STATUS_IO = 6,
  RACSIM_STATUS_JSON = 7,
  RACSIM_STATUS_PANIC = 8,
  RACSIM_STATUS_OTHER = 9,
} RacsimStatus;

/**
 * A parsed, validated scenario.
 */
typedef struct RacsimScenario RacsimScenario;

/**
 * The metric series of one run.
 */
typedef struct RacsimSeries RacsimSeries;

/**
 * One slot of a series.
 */
typedef struct RacsimRecord {
  size_t slot;
  double utility;
  double n_permitted;
  size_t n_valid;
  double accuracy;
} RacsimRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *racsim_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void racsim_string_free(char *s);

/**
 * Parses and validates a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RacsimStatus racsim_scenario_from_json(const char *json, struct RacsimScenario **out_scenario);

/**
 * # Safety
 * `scenario` must come from [`racsim_scenario_from_json`] or be NULL.
 */
void racsim_scenario_free(struct RacsimScenario *scenario);

/**
 * Runs a scenario to completion.
 *
 * # Safety
 * `scenario` must be a live handle; `out_series` must be writable.
 */
enum RacsimStatus racsim_run(const struct RacsimScenario *scenario,
                             struct RacsimSeries **out_series);

/**
 * # Safety
 * `series` must come from [`racsim_run`] or be NULL.
 */
void racsim_series_free(struct RacsimSeries *series);

/**
 * # Safety
 * `series` must be a live handle; `out_len` must be writable.
 */
enum RacsimStatus racsim_series_len(const struct RacsimSeries *series, size_t *out_len);

/**
 * # Safety
 * `series` must be a live handle; `out_record` must be writable.
 */
enum RacsimStatus racsim_series_record(const struct RacsimSeries *series,
                                       size_t index,
                                       struct RacsimRecord *out_record);

/**
 * Mean utility over the last quarter of the series.
 *
 * # Safety
 * `series` must be a live handle; `out_utility` must be writable.
 */
enum RacsimStatus racsim_series_steady_utility(const struct RacsimSeries *series,
                                               double *out_utility);

/**
 * Full series as JSON; release with [`racsim_string_free`].
 *
 * # Safety
 * `series` must be a live handle; `out_json` must be writable.
 */
enum RacsimStatus racsim_series_to_json(const struct RacsimSeries *series, char **out_json);

/**
 * Sparsity-adaptive matching pursuit on one measurement.
 *
 * `h_re`/`h_im` hold the `m x n` normalized sensing matrix in row-major
 * order, `y_re`/`y_im` the length-`m` measurement. `noise_floor` is an
 * absolute residual stopping level (0 for noiseless data) and
 * `max_support` caps the support size (0 means no cap beyond the solver's
 * own). `out_indicator` receives `n` bytes, 1 for detected users.
 *
 * # Safety
 * All arrays must have the stated lengths.
 */
enum RacsimStatus racsim_samp_recover(const double *h_re,
                                      const double *h_im,
                                      size_t m,
                                      size_t n,
                                      const double *y_re,
                                      const double *y_im,
                                      size_t step_size,
                                      size_t max_support,
                                      double noise_floor,
                                      uint8_t *out_indicator);

/**
 * `1 - |truth - estimate|_1 / n` over 0/1 byte vectors.
 *
 * # Safety
 * Both arrays must hold `n` bytes.
 */
enum RacsimStatus racsim_detection_accuracy(const uint8_t *truth,
                                            const uint8_t *estimate,
                                            size_t n,
                                            double *out_accuracy);

/**
 * System utility of one slot for `n_classes` classes.
 *
 * # Safety
 * `p`, `scores` and `counts` must each hold `n_classes` values.
 */
enum RacsimStatus racsim_utility(double accuracy,
                                 const double *p,
                                 const double *scores,
                                 const double *counts,
                                 size_t n_classes,
                                 double rho1,
                                 double rho2,
                                 double *out_utility);

/**
 * # Safety
 * `out_epsilon` must be writable.
 */
enum RacsimStatus racsim_epsilon_n(size_t n_users,
                                   size_t n_antennas,
                                   double phi,
                                   double *out_epsilon);

/**
 * Largest tolerable sparsity; `Infeasible` when none exists.
 *
 * # Safety
 * `out_sparsity` must be writable.
 */
enum RacsimStatus racsim_max_sparsity(size_t n_users,
                                      size_t n_antennas,
                                      double phi,
                                      double *out_sparsity);

/**
 * Detection-accuracy lower bound at a sparsity level.
 *
 * # Safety
 * `out_bound` must be writable.
 */
enum RacsimStatus racsim_theorem1_bound(double sparsity,
                                        size_t n_users,
                                        size_t n_antennas,
                                        double phi,
                                        double a1,
                                        double a2,
                                        double *out_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RACSIM_H */

#ifndef HESSRIC_H
#define HESSRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum HrStatus {
  HR_STATUS_OK = 0,
  HR_STATUS_NULL_POINTER = 1,
  HR_STATUS_INVALID_UTF8 = 2,
  HR_STATUS_UNKNOWN_CASE = 3,
  HR_STATUS_OUT_OF_DOMAIN = 4,
  HR_STATUS_GEOMETRY = 5,
  HR_STATUS_INVALID_ARGUMENT = 6,
  HR_STATUS_PANIC = 7,
} HrStatus;

/**
 * A finished verification report.
 */
typedef struct HrReport HrReport;

/**
 * A catalog solution (manifold chart, `f`, and its expected constants).
 */
typedef struct HrSolution HrSolution;

/**
 * Suite settings; obtain defaults from [`hr_config_default`].
 */
typedef struct HrConfig {
  double tol_identity;
  double tol_ode_limited;
  double tol_negative_control;
  uint32_t samples;
  uint64_t seed;
  uint32_t jet_order;
} HrConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *hr_version(void);

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call on the same thread. Empty when nothing failed yet.
 */
const char *hr_last_error_message(void);

struct HrConfig hr_config_default(void);

/**
 * Number of catalog cases.
 */
size_t hr_case_count(void);

/**
 * Name of catalog case `index` (static storage), or null when out of range.
 */
const char *hr_case_name(size_t index);

/**
 * Builds the named case into `*out`.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum HrStatus hr_solution_new(const char *name, struct HrSolution **out);

/**
 * # Safety
 * `solution` must be null or a handle from [`hr_solution_new`] not yet freed.
 */
void hr_solution_free(struct HrSolution *solution);

/**
 * Chart dimension, or 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t hr_solution_dim(const struct HrSolution *solution);

/**
 * `max |∇²f + f·Ric|` at a point of the chart.
 *
 * # Safety
 * `solution` must be a live handle, `point` must hold `len` doubles, and
 * `out` must be valid for a write.
 */
enum HrStatus hr_residual_main(const struct HrSolution *solution,
                               const double *point,
                               size_t len,
                               double *out);

/**
 * Scalar curvature at a point of the chart.
 *
 * # Safety
 * As for [`hr_residual_main`].
 */
enum HrStatus hr_scalar_curvature(const struct HrSolution *solution,
                                  const double *point,
                                  size_t len,
                                  double *out);

/**
 * Runs the verification suite on a named case. `config` may be null for
 * defaults.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string, `config` null or valid, and
 * `out` valid for a write.
 */
enum HrStatus hr_run_suite(const char *name, const struct HrConfig *config, struct HrReport **out);

/**
 * Overall verdict; false for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool hr_report_passed(const struct HrReport *report);

/**
 * The report as JSON; release with [`hr_string_free`]. Null on failure.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *hr_report_json(const struct HrReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void hr_string_free(char *s);

/**
 * # Safety
 * `report` must be null or a handle from [`hr_run_suite`] not yet freed.
 */
void hr_report_free(struct HrReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HESSRIC_H */

#ifndef BVBFV_H
#define BVBFV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values match the command-line exit codes where both exist.
 */
typedef enum BvbfvStatus {
  BVBFV_STATUS_OK = 0,
  /**
   * The computation ran and at least one verdict failed.
   */
  BVBFV_STATUS_CHECK_FAILED = 1,
  /**
   * Rejected input: schema, names, rationals, degrees, polarizations.
   */
  BVBFV_STATUS_VALIDATION = 2,
  /**
   * Quadrature, gluing or internal consistency failure.
   */
  BVBFV_STATUS_NUMERIC = 3,
  BVBFV_STATUS_NULL_POINTER = 4,
  BVBFV_STATUS_INVALID_UTF8 = 5,
  BVBFV_STATUS_PANIC = 6,
} BvbfvStatus;

/**
 * Report document with its JSON rendering.
 */
typedef struct BvbfvReport BvbfvReport;

/**
 * Parsed theory in half-line or interval geometry.
 */
typedef struct BvbfvTheory BvbfvTheory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Engine version, a static NUL-terminated string.
 */
const char *bvbfv_version(void);

/**
 * Message for the last failing call on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *bvbfv_last_error(void);

/**
 * Parses a theory document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BvbfvStatus bvbfv_theory_from_json(const char *json, struct BvbfvTheory **out);

/**
 * Interval BF theory of a built-in Lie algebra (`"sl2"`, `"nonabelian2"`, ...).
 *
 * # Safety
 * `algebra` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BvbfvStatus bvbfv_theory_bf(const char *algebra, struct BvbfvTheory **out);

/**
 * 1 for an interval theory, 0 for a half-line theory, −1 for null.
 *
 * # Safety
 * `theory` must be null or a handle from this library.
 */
int bvbfv_theory_is_interval(const struct BvbfvTheory *theory);

/**
 * # Safety
 * `theory` must be null or a handle from this library, freed at most once.
 */
void bvbfv_theory_free(struct BvbfvTheory *theory);

/**
 * Modified master equation; with `strict` nonzero the strict one as well.
 * Returns `Ok` or `CheckFailed` with a report in `out`.
 *
 * # Safety
 * `theory` must be a live handle and `out` a valid pointer.
 */
enum BvbfvStatus bvbfv_check_mqme(const struct BvbfvTheory *theory,
                                  int strict,
                                  struct BvbfvReport **out);

/**
 * Jacobi, flatness, BFV pair and anomaly battery for a built-in algebra.
 *
 * # Safety
 * `algebra` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum BvbfvStatus bvbfv_bf_report(const char *algebra, struct BvbfvReport **out);

/**
 * Extended propagator at scale `lambda` on the branch containing `(x, y)`,
 * default cutoff. Writes 8 values to `out`: channels `K₊`, `K₋` (row) by
 * form components `1, dx, dy, dx∧dy` (column).
 *
 * # Safety
 * `out` must point to at least 8 writable doubles.
 */
enum BvbfvStatus bvbfv_extended_propagator(double lambda, double x, double y, double *out);

/**
 * 1 when every verdict passed, 0 otherwise, −1 for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int bvbfv_report_pass(const struct BvbfvReport *report);

/**
 * JSON rendering, owned by the report.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
const char *bvbfv_report_json(const struct BvbfvReport *report);

/**
 * # Safety
 * `report` must be null or a handle from this library, freed at most once.
 */
void bvbfv_report_free(struct BvbfvReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BVBFV_H */

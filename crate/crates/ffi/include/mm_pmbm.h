#ifndef MM_PMBM_H
#define MM_PMBM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MmPmbmStatus {
  MM_PMBM_STATUS_OK = 0,
  MM_PMBM_STATUS_NULL_POINTER = 1,
  MM_PMBM_STATUS_INVALID_UTF8 = 2,
  MM_PMBM_STATUS_CONFIG = 3,
  MM_PMBM_STATUS_DIMENSION_MISMATCH = 4,
  MM_PMBM_STATUS_SINGULAR_INNOVATION = 5,
  MM_PMBM_STATUS_OUTSIDE_REGION = 6,
  MM_PMBM_STATUS_INFEASIBLE = 7,
  MM_PMBM_STATUS_BUFFER_TOO_SMALL = 8,
  MM_PMBM_STATUS_PANIC = 9,
} MmPmbmStatus;

/**
 * Opaque filter handle.
 */
typedef struct MmPmbmFilterHandle MmPmbmFilterHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a filter from a TOML run configuration. The sensor uses the
 * scenario's region, clutter rate and noise level.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MmPmbmStatus mm_pmbm_filter_new(const char *config_toml, struct MmPmbmFilterHandle **out);

/**
 * Releases a filter. Null is ignored.
 *
 * # Safety
 * `handle` must come from [`mm_pmbm_filter_new`] and not be used afterwards.
 */
void mm_pmbm_filter_free(struct MmPmbmFilterHandle *handle);

/**
 * Returns the filter to its empty initial state.
 *
 * # Safety
 * `handle` must be a live filter handle.
 */
enum MmPmbmStatus mm_pmbm_filter_reset(struct MmPmbmFilterHandle *handle);

/**
 * Measurement dimension expected by [`mm_pmbm_filter_step`].
 *
 * # Safety
 * `handle` must be a live filter handle and `out` a valid pointer.
 */
enum MmPmbmStatus mm_pmbm_filter_measurement_dim(const struct MmPmbmFilterHandle *handle,
                                                 size_t *out);

/**
 * State dimension of each estimate.
 *
 * # Safety
 * `handle` must be a live filter handle and `out` a valid pointer.
 */
enum MmPmbmStatus mm_pmbm_filter_state_dim(const struct MmPmbmFilterHandle *handle, size_t *out);

/**
 * Runs one predict and update cycle. `measurements` holds `count` points
 * stored contiguously, each of the measurement dimension. On error the
 * filter state is left unchanged.
 *
 * # Safety
 * `handle` must be a live filter handle; `measurements` must point to
 * `count * measurement_dim` doubles unless `count` is 0.
 */
enum MmPmbmStatus mm_pmbm_filter_step(struct MmPmbmFilterHandle *handle,
                                      const double *measurements,
                                      size_t count);

/**
 * Copies the current estimates into `out` as `n * state_dim` doubles and
 * stores `n` in `count`. If `capacity` (in doubles) is too small, only
 * `count` is written and `BufferTooSmall` is returned.
 *
 * # Safety
 * `handle` must be a live filter handle, `count` a valid pointer and `out`
 * valid for `capacity` doubles.
 */
enum MmPmbmStatus mm_pmbm_filter_estimates(const struct MmPmbmFilterHandle *handle,
                                           double *out,
                                           size_t capacity,
                                           size_t *count);

/**
 * Serializes the full filter state as JSON. Free the result with
 * [`mm_pmbm_string_free`].
 *
 * # Safety
 * `handle` must be a live filter handle and `out` a valid pointer.
 */
enum MmPmbmStatus mm_pmbm_filter_snapshot_json(const struct MmPmbmFilterHandle *handle, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void mm_pmbm_string_free(char *s);

/**
 * OSPA distance between two point sets of dimension `dim`, each stored
 * contiguously.
 *
 * # Safety
 * `x` must hold `nx * dim` doubles and `y` `ny * dim` doubles (either may
 * be null when its count is 0); `out` must be a valid pointer.
 */
enum MmPmbmStatus mm_pmbm_ospa(const double *x,
                               size_t nx,
                               const double *y,
                               size_t ny,
                               size_t dim,
                               double cutoff,
                               double order,
                               double *out);

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *mm_pmbm_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MM_PMBM_H */

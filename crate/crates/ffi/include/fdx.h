#ifndef FDX_H
#define FDX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call. `fdx_last_error` holds the
 * matching message for the most recent non-Ok return on this thread.
 */
typedef enum FdxStatus {
  FDX_STATUS_OK = 0,
  FDX_STATUS_NULL_ARGUMENT = 1,
  FDX_STATUS_INVALID_ARGUMENT = 2,
  FDX_STATUS_CONFIG_ERROR = 3,
  FDX_STATUS_NUMERICAL_ERROR = 4,
} FdxStatus;

/**
 * Opaque experiment configuration handle.
 */
typedef struct FdxConfig FdxConfig;

/**
 * Opaque laboratory handle: grid, stationary profile, and leading spectrum.
 */
typedef struct FdxLab FdxLab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `cap`). Returns the full message length in bytes, excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to at least `cap` writable bytes.
 */
uintptr_t fdx_last_error(char *buf, uintptr_t cap);

/**
 * Allocates a configuration with default values. Free with `fdx_config_free`.
 */
struct FdxConfig *fdx_config_new(void);

/**
 * Sets one configuration key (e.g. "q", "n", "ds") from its string value.
 *
 * # Safety
 * `key` and `value` must be valid NUL-terminated strings; `cfg` must come
 * from `fdx_config_new` and not have been freed.
 */
enum FdxStatus fdx_config_set(struct FdxConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must come from `fdx_config_new` and not have been freed already.
 */
void fdx_config_free(struct FdxConfig *cfg);

/**
 * Builds the laboratory (grid, stationary profile, leading spectrum) for a
 * configuration. On success `*out` owns the handle; free with `fdx_lab_free`.
 *
 * # Safety
 * `cfg` must be a live configuration handle and `out` a valid pointer.
 */
enum FdxStatus fdx_lab_new(const struct FdxConfig *cfg, struct FdxLab **out);

/**
 * # Safety
 * `lab` must come from `fdx_lab_new` and not have been freed already.
 */
void fdx_lab_free(struct FdxLab *lab);

/**
 * Number of interior grid nodes (the length of `fdx_lab_profile` output).
 *
 * # Safety
 * `lab` must be a live laboratory handle.
 */
enum FdxStatus fdx_lab_grid_size(const struct FdxLab *lab, uintptr_t *out);

/**
 * Copies the interior nodal values of the stationary profile into `buf`
 * (capacity `len`, which must be at least the grid size).
 *
 * # Safety
 * `lab` must be a live laboratory handle and `buf` must point to at least
 * `len` writable doubles.
 */
enum FdxStatus fdx_lab_profile(const struct FdxLab *lab, double *buf, uintptr_t len);

/**
 * Writes the j-th weighted eigenvalue (1-based) at the profile.
 *
 * # Safety
 * `lab` must be a live laboratory handle and `out` a valid pointer.
 */
enum FdxStatus fdx_lab_eigenvalue(const struct FdxLab *lab, uintptr_t j, double *out);

/**
 * Writes the predicted sharp decay rate 2 nu_2 / (q-1).
 *
 * # Safety
 * `lab` must be a live laboratory handle and `out` a valid pointer.
 */
enum FdxStatus fdx_lab_decay_rate(const struct FdxLab *lab, double *out);

/**
 * Estimates the extinction time of `scale` times the stationary profile to
 * relative tolerance `tol`.
 *
 * # Safety
 * `lab` must be a live laboratory handle and `out` a valid pointer.
 */
enum FdxStatus fdx_lab_extinction_time(const struct FdxLab *lab,
                                       double scale,
                                       double tol,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDX_H */

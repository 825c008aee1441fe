#ifndef SLOPEGROWTH_H
#define SLOPEGROWTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_INPUT = 2,
  SG_STATUS_ALPHABET_MISMATCH = 3,
  SG_STATUS_DOMAIN = 4,
  SG_STATUS_CONFIG = 5,
  SG_STATUS_RESOURCE = 6,
  SG_STATUS_LOW_DATA = 7,
  SG_STATUS_OVERFLOW = 8,
  SG_STATUS_FORMAT = 9,
  SG_STATUS_USAGE = 10,
  SG_STATUS_IO = 11,
  SG_STATUS_PANIC = 12,
} SgStatus;

/**
 * An estimated slope profile.
 */
typedef struct SgProfile SgProfile;

/**
 * A product group spec.
 */
typedef struct SgSpec SgSpec;

/**
 * A binned slope spectrum.
 */
typedef struct SgSpectrum SgSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or null. Valid until the next failing call on the thread.
 */
const char *sg_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *sg_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void sg_string_free(char *s);

/**
 * Creates a preset spec. `n_rank` is used by `example51` only; 0 selects the default.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SgStatus sg_spec_from_preset(const char *name, uint32_t n_rank, struct SgSpec **out);

/**
 * Loads a spec file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SgStatus sg_spec_from_file(const char *path, struct SgSpec **out);

/**
 * Fingerprint of `spec` as a new string; release it with `sg_string_free`.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum SgStatus sg_spec_fingerprint(const struct SgSpec *spec, char **out);

/**
 * # Safety
 * `spec` must be null or a handle from this library, freed once.
 */
void sg_spec_free(struct SgSpec *spec);

/**
 * Enumerates `spec` to abstract length `l_max` into `bins` angular bins.
 * `dedup` nonzero removes repeated elements; `jobs` 0 uses every core.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer.
 */
enum SgStatus sg_spectrum_compute(const struct SgSpec *spec,
                                  uint32_t l_max,
                                  uint32_t bins,
                                  uint8_t dedup,
                                  uint32_t jobs,
                                  struct SgSpectrum **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SgStatus sg_spectrum_load(const char *path, struct SgSpectrum **out);

/**
 * # Safety
 * `s` must be a live handle and `path` a NUL-terminated string.
 */
enum SgStatus sg_spectrum_save(const struct SgSpectrum *s, const char *path);

/**
 * Largest complete annulus index.
 *
 * # Safety
 * `s` must be a live handle and `out` a valid pointer.
 */
enum SgStatus sg_spectrum_n_max(const struct SgSpectrum *s, uint32_t *out);

/**
 * Number of elements in annulus `n` (1-based).
 *
 * # Safety
 * `s` must be a live handle and `out` a valid pointer.
 */
enum SgStatus sg_spectrum_annulus_count(const struct SgSpectrum *s, uint32_t n, uint64_t *out);

/**
 * # Safety
 * `s` must be null or a handle from this library, freed once.
 */
void sg_spectrum_free(struct SgSpectrum *s);

/**
 * Estimates the profile on a uniform grid of `grid_points` slopes.
 * `eps` lists `eps_len` decreasing tolerances; `window_lo == 0` selects the top half of the annuli.
 *
 * # Safety
 * `s` must be a live handle, `eps` must point to `eps_len` values and `out` must be valid.
 */
enum SgStatus sg_profile_build(const struct SgSpectrum *s,
                               uint32_t grid_points,
                               const double *eps,
                               size_t eps_len,
                               uint32_t min_samples,
                               uint32_t window_lo,
                               uint32_t window_hi,
                               struct SgProfile **out);

/**
 * Number of grid points.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum SgStatus sg_profile_len(const struct SgProfile *p, size_t *out);

/**
 * Grid point `i`. The sentinel rate is reported as `-INFINITY`; an undefined
 * stderr as NaN. `low_data` is set to 1 when the value is not backed by enough data.
 *
 * # Safety
 * `p` must be a live handle and every output pointer valid.
 */
enum SgStatus sg_profile_point(const struct SgProfile *p,
                               size_t i,
                               double *theta,
                               double *delta,
                               double *stderr,
                               uint8_t *low_data);

/**
 * Maximizing slope and its rate.
 *
 * # Safety
 * `p` must be a live handle and the output pointers valid.
 */
enum SgStatus sg_profile_theta_star(const struct SgProfile *p, double *theta, double *delta);

/**
 * # Safety
 * `p` must be null or a handle from this library, freed once.
 */
void sg_profile_free(struct SgProfile *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLOPEGROWTH_H */

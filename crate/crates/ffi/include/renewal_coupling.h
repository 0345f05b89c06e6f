#ifndef RENEWAL_COUPLING_H
#define RENEWAL_COUPLING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_UTF8 = 2,
  RC_STATUS_PARSE = 3,
  RC_STATUS_INVALID_ARGUMENT = 4,
  RC_STATUS_DOMAIN = 5,
  RC_STATUS_INFEASIBLE = 6,
  RC_STATUS_NO_OVERLAP = 7,
  RC_STATUS_PANIC = 8,
} RcStatus;

/**
 * Opaque lifetime law.
 */
typedef struct RcLaw RcLaw;

/**
 * Constants of the total-variation bound.
 */
typedef struct RcBoundSet {
  double alpha;
  double r;
  double theta;
  double pi_r;
  double p_r;
  double kappa_r;
  double q_r;
  double k1;
  double k2;
  double k_alpha_b1;
  double b1;
} RcBoundSet;

/**
 * Outcome of one coupled run. `tau` is NaN when `coupled` is false.
 */
typedef struct RcCoupleResult {
  double tau;
  uint64_t attempts;
  bool coupled;
} RcCoupleResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a law such as `"gamma(shape=2,rate=1)"` into a new handle.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a writable pointer.
 * The handle written to `out` must be released with [`rc_law_free`].
 */
enum RcStatus rc_law_parse(const char *spec, struct RcLaw **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `law` must be null or a handle from [`rc_law_parse`] not yet freed.
 */
void rc_law_free(struct RcLaw *law);

/**
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RcStatus rc_law_cdf(const struct RcLaw *law, double x, double *out);

/**
 * Generalised inverse cdf at `u` in `[0, 1)`.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RcStatus rc_law_inverse_cdf(const struct RcLaw *law, double u, double *out);

/**
 * `E zeta^k`; `RC_STATUS_DOMAIN` when the moment is infinite.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RcStatus rc_law_moment(const struct RcLaw *law, double k, double *out);

/**
 * `kappa = int min(f1, f2)`.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum RcStatus rc_common_part(const struct RcLaw *a, const struct RcLaw *b, double *out);

/**
 * Bound constants at `(alpha, r, b1)`. A non-positive or NaN `r` selects
 * the optimised threshold.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RcStatus rc_bound_set(const struct RcLaw *law,
                           double alpha,
                           double r,
                           double b1,
                           struct RcBoundSet *out);

/**
 * One coupled run from ages `b1`, `b2` with threshold `r`.
 *
 * # Safety
 * `law` must be a live handle and `out` writable.
 */
enum RcStatus rc_couple(const struct RcLaw *law,
                        double b1,
                        double b2,
                        double r,
                        uint64_t max_attempts,
                        uint64_t seed,
                        struct RcCoupleResult *out);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the length needed to
 * hold the whole message including the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t rc_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RENEWAL_COUPLING_H */

#ifndef KVGEOM_H
#define KVGEOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum KvgStatus {
  KVG_STATUS_OK = 0,
  KVG_STATUS_NULL_POINTER = 1,
  KVG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The point lies outside the region where the construction is defined.
   */
  KVG_STATUS_OUTSIDE_DOMAIN = 3,
  /**
   * Quadrature failure, non-finite value or loss of subalgebra closure.
   */
  KVG_STATUS_NUMERICAL_FAILURE = 4,
  KVG_STATUS_PARSE = 5,
  KVG_STATUS_IO = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  KVG_STATUS_INTERNAL = 7,
} KvgStatus;

/**
 * BCH word order.
 */
typedef enum KvgOrder {
  KVG_ORDER_XY = 0,
  KVG_ORDER_YX = 1,
} KvgOrder;

/**
 * Opaque quadratic Lie algebra.
 */
typedef struct KvgAlgebra KvgAlgebra;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *kvg_last_error_message(void);

/**
 * Creates a built-in algebra (`so3`, `sl2`, `gl2`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KvgStatus kvg_algebra_builtin(const char *name, struct KvgAlgebra **out);

/**
 * Creates an algebra from a JSON descriptor `{name, basis, form?, domainRadius?}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KvgStatus kvg_algebra_from_json(const char *json, struct KvgAlgebra **out);

/**
 * Releases a handle; null is a no-op.
 *
 * # Safety
 * `alg` must come from this library and not be used afterwards.
 */
void kvg_algebra_free(struct KvgAlgebra *alg);

/**
 * Dimension of the algebra; 0 for a null handle.
 *
 * # Safety
 * `alg` must be null or a live handle.
 */
size_t kvg_algebra_dim(const struct KvgAlgebra *alg);

/**
 * Writes `Φ_t(x, y) = t⁻¹ log(e^{tx} e^{ty})` to `out`.
 *
 * # Safety
 * `x`, `y`, `out` must each point to `dim` doubles.
 */
enum KvgStatus kvg_phi_t(const struct KvgAlgebra *alg,
                         double t,
                         const double *x,
                         const double *y,
                         double *out);

/**
 * Writes the Jacobian ratio `κ_t(x, y)` to `out`.
 *
 * # Safety
 * `x`, `y` must each point to `dim` doubles; `out` to one double.
 */
enum KvgStatus kvg_kappa_t(const struct KvgAlgebra *alg,
                           double t,
                           const double *x,
                           const double *y,
                           double *out);

/**
 * Pointwise values of the pair `(A, B)` at `(x, y)`.
 *
 * # Safety
 * All four arrays must hold `dim` doubles.
 */
enum KvgStatus kvg_extract_ab(const struct KvgAlgebra *alg,
                              const double *x,
                              const double *y,
                              double *a_out,
                              double *b_out);

/**
 * Max-norm residual of the first KV equation for the values `a`, `b` at `(x, y)`.
 *
 * # Safety
 * `x`, `y`, `a`, `b` must each point to `dim` doubles; `out` to one double.
 */
enum KvgStatus kvg_eq1_residual(const struct KvgAlgebra *alg,
                                const double *x,
                                const double *y,
                                const double *a,
                                const double *b,
                                double *out);

/**
 * BCH series through `degree` (1..=10) as the JSON report; free with `kvg_string_free`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KvgStatus kvg_bch_json(size_t degree, enum KvgOrder order, char **out);

/**
 * Frees a string returned by this library; null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void kvg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KVGEOM_H */

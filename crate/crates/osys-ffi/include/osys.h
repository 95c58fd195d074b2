/* C interface for the operator-system toolkit. */

#ifndef OSYS_H
#define OSYS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of every call; anything but `Ok` leaves the outputs untouched.
 */
typedef enum OsysStatus {
  OSYS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  OSYS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A row, column, or vertex index was out of range.
   */
  OSYS_STATUS_BAD_INDEX = 2,
  /**
   * An argument violated a documented invariant (zero dimension, loop
   * edge, zero multiplicity, ...).
   */
  OSYS_STATUS_BAD_ARGUMENT = 3,
  /**
   * The output buffer was too short; the required length is reported.
   */
  OSYS_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * An internal numeric routine failed on this input.
   */
  OSYS_STATUS_NUMERIC = 5,
  /**
   * A panic was caught at the boundary; treat the handle as poisoned.
   */
  OSYS_STATUS_PANIC = 6,
} OsysStatus;

/**
 * Opaque complex square matrix. Create with `osys_matrix_new`, release
 * with `osys_matrix_free`.
 */
typedef struct OsysMatrix OsysMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the library as a static NUL-terminated string.
 */
const char *osys_version(void);

/**
 * Static name for a status code, for log messages.
 */
const char *osys_status_name(enum OsysStatus status);

/**
 * Allocates a dim x dim zero matrix and writes the handle to `out`.
 */
enum OsysStatus osys_matrix_new(size_t dim, struct OsysMatrix **out);

/**
 * Releases a matrix handle; a null handle is a no-op.
 */
void osys_matrix_free(struct OsysMatrix *m);

/**
 * Writes the side length of the matrix.
 */
enum OsysStatus osys_matrix_dim(const struct OsysMatrix *m, size_t *out);

/**
 * Sets entry (row, col), 0-based, to re + im*i.
 */
enum OsysStatus osys_matrix_set(struct OsysMatrix *m, size_t row, size_t col, double re, double im);

/**
 * Reads entry (row, col), 0-based.
 */
enum OsysStatus osys_matrix_get(const struct OsysMatrix *m,
                                size_t row,
                                size_t col,
                                double *re,
                                double *im);

/**
 * Whether the matrix is positive semidefinite within eps; a non-hermitian
 * matrix is reported as not positive rather than as an error.
 */
enum OsysStatus osys_matrix_is_psd(const struct OsysMatrix *m, double eps, bool *out);

/**
 * Operator norm (largest singular value).
 */
enum OsysStatus osys_matrix_op_norm(const struct OsysMatrix *m, double *out);

/**
 * Kronecker product left (x) right as a fresh handle.
 */
enum OsysStatus osys_matrix_kron(const struct OsysMatrix *left,
                                 const struct OsysMatrix *right,
                                 struct OsysMatrix **out);

/**
 * Block-repeats the matrix `mult` times along the tower index convention
 * (the multiplicity-mult unital embedding) as a fresh handle.
 */
enum OsysStatus osys_matrix_embed(const struct OsysMatrix *m, size_t mult, struct OsysMatrix **out);

/**
 * Block sizes of the C*-envelope of the graph system on n vertices.
 *
 * `edges` is a flat list of `edge_count` pairs (i, j) with 1-based
 * vertices, either orientation, no loops. Sizes are written largest
 * first; `out_len` receives the count even when the buffer is short, so
 * callers can retry with `BufferTooSmall`.
 */
enum OsysStatus osys_envelope_blocks(size_t n,
                                     const size_t *edges,
                                     size_t edge_count,
                                     size_t *out_blocks,
                                     size_t out_capacity,
                                     size_t *out_len);

/**
 * Whether two matrix towers generate the same limit algebra.
 *
 * Each tower is a first dimension n1 plus a finite prefix of
 * multiplicities followed by a repeating period (the period may be empty
 * for a tower that stops growing). On the non-equivalent verdict,
 * `out_prime` receives the separating prime and `out_larger_right`
 * whether the right tower carries the larger exponent.
 */
enum OsysStatus osys_glimm_equivalent(uint64_t n1_a,
                                      const uint64_t *prefix_a,
                                      size_t prefix_a_len,
                                      const uint64_t *period_a,
                                      size_t period_a_len,
                                      uint64_t n1_b,
                                      const uint64_t *prefix_b,
                                      size_t prefix_b_len,
                                      const uint64_t *period_b,
                                      size_t period_b_len,
                                      bool *out_equivalent,
                                      uint64_t *out_prime,
                                      bool *out_larger_right);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSYS_H */

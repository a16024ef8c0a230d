#ifndef PFSCHUR_H
#define PFSCHUR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// `K22` denominator convention.
typedef enum PfsSign {
  // `(zw − 1)`.
  PFS_SIGN_ZW_MINUS_ONE = 0,
  // `(1 − zw)`.
  PFS_SIGN_ONE_MINUS_ZW = 1,
} PfsSign;

// Result codes.
typedef enum PfsStatus {
  PFS_STATUS_OK = 0,
  PFS_STATUS_NULL_POINTER = 1,
  PFS_STATUS_INVALID_ARGUMENT = 2,
  PFS_STATUS_DIVERGENCE = 3,
  PFS_STATUS_NON_CONVERGENCE = 4,
  PFS_STATUS_ASYMMETRY = 5,
  PFS_STATUS_POLE = 6,
  PFS_STATUS_PANIC = 7,
} PfsStatus;

// Opaque multi-level specialization data.
typedef struct PfsProcess PfsProcess;

// A correlation value with its diagnostic.
typedef struct PfsValue {
  double value;
  // Imaginary part magnitude for kernel results, truncation tail for oracle results.
  double diagnostic;
} PfsValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. Valid until the next call.
const char *pfs_last_error(void);

// Builds a process with `m` levels. Level `i` takes `plus_lens[i]` consecutive
// values of `plus_values` for `ρ+_i` and likewise `minus_*` for `ρ−_{i−1}`.
//
// # Safety
// Arrays must hold the stated number of elements; `out` must be writable.
enum PfsStatus pfs_process_new(size_t m,
                               const double *plus_values,
                               const size_t *plus_lens,
                               const double *minus_values,
                               const size_t *minus_lens,
                               struct PfsProcess **out);

// # Safety
// `p` must come from [`pfs_process_new`] and not be used afterwards.
void pfs_process_free(struct PfsProcess *p);

// Number of levels.
//
// # Safety
// `p` must be a live handle.
enum PfsStatus pfs_process_levels(const struct PfsProcess *p, size_t *out);

// Closed-form normalization of the Pfaffian Schur process.
//
// # Safety
// `p` must be a live handle; `out` writable.
enum PfsStatus pfs_partition_function(const struct PfsProcess *p, double *out);

// `ρ(T)` by the Pfaffian of the contour-integral kernel. `levels` may be null for all-level-1.
//
// # Safety
// `levels` (if non-null) and `positions` must hold `d` elements; `out` writable.
enum PfsStatus pfs_correlation_kernel(const struct PfsProcess *p,
                                      const size_t *levels,
                                      const int64_t *positions,
                                      size_t d,
                                      enum PfsSign sign,
                                      double quad_tol,
                                      struct PfsValue *out);

// `ρ(T)` by truncated enumeration up to weight `truncation`.
//
// # Safety
// As [`pfs_correlation_kernel`].
enum PfsStatus pfs_correlation_oracle(const struct PfsProcess *p,
                                      const size_t *levels,
                                      const int64_t *positions,
                                      size_t d,
                                      size_t truncation,
                                      struct PfsValue *out);

// `ρ(T)` for a single-level process by coefficient extraction in `q`.
//
// # Safety
// `positions` must hold `d` elements; `out` writable.
enum PfsStatus pfs_correlation_q_extraction(const struct PfsProcess *p,
                                            const int64_t *positions,
                                            size_t d,
                                            struct PfsValue *out);

// Pfaffian of a `dim × dim` skew-symmetric complex matrix in row-major split storage.
// `im` may be null for a real matrix. Inputs that are not skew-symmetric to roundoff are rejected.
//
// # Safety
// `re` (and `im` if non-null) must hold `dim²` elements; outputs writable.
enum PfsStatus pfs_pfaffian(size_t dim,
                            const double *re,
                            const double *im,
                            double *out_re,
                            double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFSCHUR_H */

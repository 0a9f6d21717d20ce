#ifndef GSRDP_H
#define GSRDP_H

#include <stddef.h>
#include <stdint.h>

/*
 Result code of every fallible call.
 */
typedef enum GsrdpStatus {
  GSRDP_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  GSRDP_STATUS_NULL_POINTER = 1,
  GSRDP_STATUS_INVALID_ARGUMENT = 2,
  /*
   The privacy bound's conditions fail, or the dataset is outside the
   eigenvalue floor.
   */
  GSRDP_STATUS_CONDITION_VIOLATED = 3,
  GSRDP_STATUS_IO = 4,
  /*
   A covariance could not be factorized.
   */
  GSRDP_STATUS_NUMERIC = 5,
  /*
   The caller's buffer is too small.
   */
  GSRDP_STATUS_BUFFER_TOO_SMALL = 6,
  /*
   An internal panic was caught at the boundary.
   */
  GSRDP_STATUS_PANIC = 7,
} GsrdpStatus;

typedef enum GsrdpMode {
  GSRDP_MODE_UNBOUNDED = 0,
  GSRDP_MODE_BOUNDED = 1,
} GsrdpMode;

/*
 Opaque dataset handle.
 */
typedef struct GsrdpDataset GsrdpDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Length in bytes of the last error message on this thread, excluding the
 terminating NUL.
 */
size_t gsrdp_last_error_length(void);

/*
 Copies the last error message on this thread into `buf` as a
 NUL-terminated string. `len` must be at least
 `gsrdp_last_error_length() + 1`.

 # Safety
 `buf` must be valid for `len` bytes of writes.
 */
enum GsrdpStatus gsrdp_last_error_message(char *buf, size_t len);

/*
 Per-record (α, ε)-RDP bound for a size-`n` input in `[-1, 1]^d` whose
 covariance has minimum eigenvalue at least `sigma`.

 # Safety
 `out_epsilon` must be valid for a write.
 */
enum GsrdpStatus gsrdp_epsilon(size_t d,
                               uint64_t n,
                               double sigma,
                               double alpha,
                               enum GsrdpMode mode,
                               double *out_epsilon);

/*
 RDP budget of `k` releases at the same order.
 */
double gsrdp_compose(double eps_single, uint64_t k);

/*
 (ε, δ)-DP epsilon implied by (α, ε)-RDP.

 # Safety
 `out_epsilon_dp` must be valid for a write.
 */
enum GsrdpStatus gsrdp_rdp_to_dp(double alpha, double eps, double delta, double *out_epsilon_dp);

/*
 Builds a dataset from `n * d` row-major values in `[-1, 1]`.

 # Safety
 `values` must point to `n * d` readable doubles (it may be null when
 `n == 0`); `out` must be valid for a write.
 */
enum GsrdpStatus gsrdp_dataset_new(const double *values,
                                   size_t n,
                                   size_t d,
                                   struct GsrdpDataset **out);

/*
 Loads every column of a CSV file. With `normalize` non-zero each column
 is min-max mapped onto `[-1, 1]`; otherwise values must already lie
 there.

 # Safety
 `path` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum GsrdpStatus gsrdp_dataset_from_csv(const char *path,
                                        int32_t normalize,
                                        struct GsrdpDataset **out);

/*
 Releases a dataset. Null is ignored.

 # Safety
 `ds` must come from a `gsrdp_*` constructor and not be used afterwards.
 */
void gsrdp_dataset_free(struct GsrdpDataset *ds);

/*
 Number of records; 0 for null.

 # Safety
 `ds` must be null or a live handle.
 */
size_t gsrdp_dataset_len(const struct GsrdpDataset *ds);

/*
 Record dimension; 0 for null.

 # Safety
 `ds` must be null or a live handle.
 */
size_t gsrdp_dataset_dim(const struct GsrdpDataset *ds);

/*
 Copies the records row-major into `buf`, which holds `len` doubles.

 # Safety
 `ds` must be a live handle; `buf` must be valid for `len` writes.
 */
enum GsrdpStatus gsrdp_dataset_copy_records(const struct GsrdpDataset *ds, double *buf, size_t len);

/*
 Smallest eigenvalue of the dataset's covariance.

 # Safety
 `ds` must be a live handle; `out` must be valid for a write.
 */
enum GsrdpStatus gsrdp_dataset_min_eigenvalue(const struct GsrdpDataset *ds, double *out);

/*
 Draws `count` synthetic records from `ds`. Fails with
 `ConditionViolated` when the covariance's minimum eigenvalue is below
 `sigma`, since no guarantee would hold.

 # Safety
 `ds` must be a live handle; `out` must be valid for a write.
 */
enum GsrdpStatus gsrdp_generate(const struct GsrdpDataset *ds,
                                double sigma,
                                uint64_t seed,
                                size_t count,
                                struct GsrdpDataset **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSRDP_H */

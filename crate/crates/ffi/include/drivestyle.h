#ifndef DRIVESTYLE_H
#define DRIVESTYLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Number of values written by [`ds_features_extract`].
 */
#define DS_FEATURE_COUNT 22

/*
 Status code of every fallible call.
 */
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_INVALID_ARGUMENT = 2,
  /*
   Input data failed validation.
   */
  DS_STATUS_VALIDATION = 3,
  DS_STATUS_IO = 4,
  DS_STATUS_INDEX_OUT_OF_RANGE = 5,
  DS_STATUS_BUFFER_TOO_SMALL = 6,
  /*
   The computation finished but did not converge; outputs are set.
   */
  DS_STATUS_NOT_CONVERGED = 7,
  DS_STATUS_PANIC = 8,
} DsStatus;

typedef enum DsLabel {
  DS_LABEL_SAFE = 0,
  DS_LABEL_DANGEROUS = 1,
  DS_LABEL_UNLABELED = 2,
} DsLabel;

typedef enum DsSeverity {
  DS_SEVERITY_VERY_SAFE = 0,
  DS_SEVERITY_SAFE = 1,
  DS_SEVERITY_DANGEROUS = 2,
} DsSeverity;

/*
 Opaque collection of validated sensor segments.
 */
typedef struct DsSegments DsSegments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Load a segment CSV file. On success `*out` owns a new handle.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsStatus ds_segments_load_csv(const char *path, struct DsSegments **out);

/*
 Generate a synthetic corpus of `n_per_class` safe and as many dangerous
 segments. `kind` is one of `turn`, `uturn`, `lane_change`, `brake`,
 `gas`.

 # Safety
 `kind` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsStatus ds_segments_synth(const char *kind,
                                size_t n_per_class,
                                uint64_t seed,
                                struct DsSegments **out);

/*
 Number of segments; 0 for a null handle.

 # Safety
 `handle` must be null or a live handle.
 */
size_t ds_segments_len(const struct DsSegments *handle);

/*
 Release a handle. Null is ignored.

 # Safety
 `handle` must be null or a live handle not used afterwards.
 */
void ds_segments_free(struct DsSegments *handle);

/*
 # Safety
 `handle` must be a live handle and `out` a valid pointer.
 */
enum DsStatus ds_segment_label(const struct DsSegments *handle, size_t index, enum DsLabel *out);

/*
 Write the 22 wavelet features of segment `index` into `out`, which
 holds `out_len` doubles.

 # Safety
 `handle` must be a live handle and `out` valid for `out_len` writes.
 */
enum DsStatus ds_features_extract(const struct DsSegments *handle,
                                  size_t index,
                                  double *out,
                                  size_t out_len);

/*
 Apply the braking rule to segment `index`. Thresholds are in m/s²;
 pass 0 for any of them to use the defaults (0.11 g, 0.45 g, 3 s).

 # Safety
 `handle` must be a live handle; the outputs must be valid pointers.
 */
enum DsStatus ds_classify_braking(const struct DsSegments *handle,
                                  size_t index,
                                  double very_safe,
                                  double dangerous,
                                  double window_s,
                                  double *out_delta_a,
                                  enum DsSeverity *out_severity);

/*
 Fit two Gaussians to `n` samples. `out_params` receives
 `a1, b1, c1, a2, b2, c2, rmse` (7 doubles). Returns
 `DS_STATUS_NOT_CONVERGED` with the best point written if the fit
 stopped early.

 # Safety
 `ts` and `ys` must be valid for `n` reads, `out_params` for 7 writes.
 */
enum DsStatus ds_fit_two_gaussians(const double *ts,
                                   const double *ys,
                                   size_t n,
                                   size_t max_iters,
                                   double tol,
                                   double *out_params);

/*
 Area under the ROC curve of `scores` against `positive` flags
 (nonzero means dangerous), ties counted half.

 # Safety
 `scores` and `positive` must be valid for `n` reads.
 */
enum DsStatus ds_auc(const double *scores, const uint8_t *positive, size_t n, double *out);

/*
 Message of the last failed call on this thread, empty after a success.
 Valid until the next call on the same thread.
 */
const char *ds_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ds_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRIVESTYLE_H */

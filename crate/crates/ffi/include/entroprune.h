#ifndef ENTROPRUNE_H
#define ENTROPRUNE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `Ok` is zero; everything else is a failure.
 */
typedef enum EpStatus {
  EP_STATUS_OK = 0,
  EP_STATUS_INVALID_INPUT = 1,
  EP_STATUS_PARSE = 2,
  EP_STATUS_CONFIG = 3,
  EP_STATUS_ORACLE_TOO_LARGE = 4,
  EP_STATUS_IO = 5,
  EP_STATUS_NULL_POINTER = 6,
  EP_STATUS_INVALID_UTF8 = 7,
  EP_STATUS_PANIC = 8,
} EpStatus;

/**
 * A prediction matrix with its true labels.
 */
typedef struct EpEnsemble EpEnsemble;

/**
 * A pruned sub-ensemble.
 */
typedef struct EpSelection EpSelection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds an ensemble from `n` rows of `d` class ids (row-major) and `d` labels.
 *
 * # Safety
 * `predictions` must point to `n * d` values, `labels` to `d` values, and
 * `out` to writable storage for one pointer.
 */
enum EpStatus ep_ensemble_new(const uint32_t *predictions,
                              size_t n,
                              size_t d,
                              const uint32_t *labels,
                              struct EpEnsemble **out);

/**
 * Loads a prediction CSV and a label CSV.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum EpStatus ep_ensemble_load_csv(const char *predictions_path,
                                   const char *labels_path,
                                   struct EpEnsemble **out);

/**
 * # Safety
 * `ens` must come from this library and not be freed twice. Null is ignored.
 */
void ep_ensemble_free(struct EpEnsemble *ens);

/**
 * Number of classifiers, or 0 for a null handle.
 *
 * # Safety
 * `ens` must be null or a live handle.
 */
size_t ep_ensemble_n(const struct EpEnsemble *ens);

/**
 * Number of instances, or 0 for a null handle.
 *
 * # Safety
 * `ens` must be null or a live handle.
 */
size_t ep_ensemble_d(const struct EpEnsemble *ens);

/**
 * Prunes with a named pruner: `comep`, `reduce-error`, `kappa` or `random`.
 *
 * # Safety
 * `ens` must be a live handle, `algo` a NUL-terminated string and `out`
 * writable.
 */
enum EpStatus ep_prune(const struct EpEnsemble *ens,
                       const char *algo,
                       double lambda,
                       size_t k,
                       uint64_t seed,
                       struct EpSelection **out);

/**
 * Two-round distributed pruning of `machines` random groups with a named
 * pruner. `criterion` is `tdas` or `voted-accuracy`.
 *
 * # Safety
 * As for [`ep_prune`]; `criterion` must be a NUL-terminated string.
 */
enum EpStatus ep_distributed(const struct EpEnsemble *ens,
                             const char *algo,
                             double lambda,
                             size_t k,
                             size_t machines,
                             uint64_t seed,
                             const char *criterion,
                             struct EpSelection **out);

/**
 * # Safety
 * `sel` must be null or a live handle.
 */
size_t ep_selection_len(const struct EpSelection *sel);

/**
 * Copies the selected indices, in selection order, into `buf`. Fails with
 * `InvalidInput` if `capacity` is smaller than the selection.
 *
 * # Safety
 * `sel` must be a live handle and `buf` must have room for `capacity` values.
 */
enum EpStatus ep_selection_indices(const struct EpSelection *sel, size_t *buf, size_t capacity);

/**
 * Objective value of the selection, or NaN for a null handle.
 *
 * # Safety
 * `sel` must be null or a live handle.
 */
double ep_selection_tdas(const struct EpSelection *sel);

/**
 * Pairwise-score evaluations spent by the pruner.
 *
 * # Safety
 * `sel` must be null or a live handle.
 */
uint64_t ep_selection_eval_count(const struct EpSelection *sel);

/**
 * # Safety
 * `sel` must come from this library and not be freed twice. Null is ignored.
 */
void ep_selection_free(struct EpSelection *sel);

/**
 * Objective value of an arbitrary subset.
 *
 * # Safety
 * `indices` must point to `count` values and `out` must be writable.
 */
enum EpStatus ep_tdas(const struct EpEnsemble *ens,
                      const size_t *indices,
                      size_t count,
                      double lambda,
                      double *out);

/**
 * Normalized mutual information of two label vectors of length `d`.
 *
 * # Safety
 * `x` and `y` must point to `d` values and `out` must be writable.
 */
enum EpStatus ep_norm_mi(const uint32_t *x, const uint32_t *y, size_t d, double *out);

/**
 * Normalized variation of information of two label vectors of length `d`.
 *
 * # Safety
 * `x` and `y` must point to `d` values and `out` must be writable.
 */
enum EpStatus ep_norm_vi(const uint32_t *x, const uint32_t *y, size_t d, double *out);

/**
 * Message for the last failure on this thread, or null if there was none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ep_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ep_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTROPRUNE_H */

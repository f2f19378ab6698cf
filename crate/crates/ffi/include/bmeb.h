#ifndef BMEB_H
#define BMEB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  BMEB_STATUS_OK = 0,
  BMEB_STATUS_INVALID_INPUT = 1,
  BMEB_STATUS_NULL_POINTER = 2,
  BMEB_STATUS_CAPABILITY = 3,
  BMEB_STATUS_DEGENERATE_MAGNETIZATION = 4,
  BMEB_STATUS_DEGENERATE_OBJECTIVE = 5,
  BMEB_STATUS_NUMERICAL = 6,
  BMEB_STATUS_PARSE = 7,
  BMEB_STATUS_IO = 8,
  BMEB_STATUS_INTERNAL = 9,
} BmebStatus;

typedef enum {
  BMEB_PRIOR_GAUSSIAN = 0,
  BMEB_PRIOR_LAPLACE = 1,
} BmebPrior;

typedef enum {
  BMEB_BRANCH_ZERO = 0,
  BMEB_BRANCH_FINITE = 1,
  BMEB_BRANCH_DIVERGED = 2,
} BmebBranch;

/**
 * Opaque dataset handle.
 */
typedef struct BmebDataset BmebDataset;

/**
 * Opaque estimate handle.
 */
typedef struct BmebResult BmebResult;

/**
 * Aggregate statistics of a dataset.
 */
typedef struct {
  size_t n;
  size_t n_samples;
  double magnetization;
  double c1;
  double c2;
  double omega;
} BmebStats;

/**
 * Flat view of an estimate. `gamma_hat` and `j_hat` are `+inf` on the
 * diverged branch, where `has_h_hat` is false and `h_hat` is NaN.
 */
typedef struct {
  BmebBranch branch;
  double gamma_hat;
  double j_hat;
  bool has_h_hat;
  double h_hat;
  double magnetization;
  double entropy;
  double phi;
  double phi2;
  bool laplace_ok;
  double laplace_margin;
} BmebEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. Valid
 * until the next failing call on the same thread; do not free.
 */
const char *bmeb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bmeb_version(void);

/**
 * Copy `n_samples * n` spins (row-major, each -1 or +1) into a new dataset.
 *
 * # Safety
 * `spins` must point to `n * n_samples` readable `int8_t`; `out` must be
 * valid for writes.
 */
BmebStatus bmeb_dataset_new(size_t n, size_t n_samples, const int8_t *spins, BmebDataset **out);

/**
 * Read a dataset file: a header line `n N`, then `N` rows of `n` spins.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
BmebStatus bmeb_dataset_read(const char *path, BmebDataset **out);

/**
 * Draw a machine with field `h` and coupling scale `j` from `prior`, then
 * sample `n_samples` configurations with the default annealing schedule.
 * Identical to `bmeb generate` with the same arguments.
 *
 * # Safety
 * `out` must be valid for writes.
 */
BmebStatus bmeb_dataset_generate(size_t n,
                                 size_t n_samples,
                                 double h,
                                 double j,
                                 BmebPrior prior,
                                 uint64_t seed,
                                 BmebDataset **out);

/**
 * # Safety
 * `data` must be a live handle or null; `stats` must be valid for writes.
 */
BmebStatus bmeb_dataset_stats(const BmebDataset *data, BmebStats *stats);

/**
 * Copy the spins (row-major) into `buf`, which holds `len` entries.
 *
 * # Safety
 * `data` must be a live handle or null; `buf` must be valid for `len`
 * writes.
 */
BmebStatus bmeb_dataset_spins(const BmebDataset *data, int8_t *buf, size_t len);

/**
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void bmeb_dataset_free(BmebDataset *data);

/**
 * Estimate `gamma` and `H` from a dataset.
 *
 * # Safety
 * `data` must be a live handle or null; `out` must be valid for writes.
 */
BmebStatus bmeb_estimate(const BmebDataset *data, BmebResult **out);

/**
 * Estimate from aggregate statistics alone.
 *
 * # Safety
 * `stats` must be readable or null; `out` must be valid for writes.
 */
BmebStatus bmeb_estimate_from_stats(const BmebStats *stats, BmebResult **out);

/**
 * # Safety
 * `result` must be a live handle or null; `view` must be valid for writes.
 */
BmebStatus bmeb_result_get(const BmebResult *result, BmebEstimate *view);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void bmeb_result_free(BmebResult *result);

/**
 * Suggested sample size `N` for a field guess `h` at `n` spins.
 */
size_t bmeb_advise_sample_size(double h, size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BMEB_H */

#ifndef NEWSMACRO_H
#define NEWSMACRO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_ARGUMENT = 1,
  NM_STATUS_INVALID_ARGUMENT = 2,
  NM_STATUS_PARSE_ERROR = 3,
  NM_STATUS_INSUFFICIENT_DATA = 4,
  NM_STATUS_NUMERICAL_ERROR = 5,
  NM_STATUS_NOT_FOUND = 6,
  NM_STATUS_PIPELINE_ERROR = 7,
  NM_STATUS_PANIC = 8,
} NmStatus;

/**
 * A fitted SIMPLS model.
 */
typedef struct NmPls NmPls;

/**
 * A parsed GKG 2.1 row.
 */
typedef struct NmRecord NmRecord;

typedef struct {
  double statistic;
  double p_value;
  double mean_loss_diff;
  bool degenerate;
} NmDmResult;

typedef struct {
  double t_stat;
  size_t used_lag;
  size_t nobs;
  /**
   * 1%, 5%, 10%.
   */
  double critical_values[3];
  bool reject_at_5pct;
} NmAdfResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *nm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nm_version(void);

/**
 * Parse one tab-delimited GKG 2.1 line (no trailing newline).
 *
 * # Safety
 * `line` must be a valid NUL-terminated string and `out` writable.
 */
NmStatus nm_record_parse(const char *line, NmRecord **out);

/**
 * # Safety
 * `record` must come from `nm_record_parse` and not be used afterwards.
 */
void nm_record_free(NmRecord *record);

/**
 * Record identifier, owned by the handle.
 *
 * # Safety
 * `record` must be a live handle.
 */
const char *nm_record_id(const NmRecord *record);

/**
 * # Safety
 * `record` must be a live handle and `out` writable.
 */
NmStatus nm_record_word_count(const NmRecord *record, uint64_t *out);

/**
 * # Safety
 * `record` must be a live handle and `out` writable.
 */
NmStatus nm_record_average_tone(const NmRecord *record, double *out);

/**
 * Number of themes and of location references.
 *
 * # Safety
 * `record` must be a live handle; output pointers writable.
 */
NmStatus nm_record_counts(const NmRecord *record, size_t *themes, size_t *locations);

/**
 * Value of a GCAM key; `NotFound` when the record lacks it.
 *
 * # Safety
 * `record` must be a live handle, `key` a NUL-terminated string, `out` writable.
 */
NmStatus nm_record_gcam_value(const NmRecord *record, const char *key, double *out);

/**
 * Benjamini-Hochberg adjusted p-values, in input order.
 *
 * # Safety
 * `p_values` and `out` must each hold `n` doubles.
 */
NmStatus nm_bh_adjust(const double *p_values, size_t n, double *out);

/**
 * Diebold-Mariano test on squared loss; positive statistic when `errors_a`
 * has the larger loss.
 *
 * # Safety
 * `errors_a` and `errors_b` must hold `n` doubles; `out` writable.
 */
NmStatus nm_dm_test(const double *errors_a,
                    const double *errors_b,
                    size_t n,
                    size_t horizon,
                    NmDmResult *out);

/**
 * Augmented Dickey-Fuller test with a constant and AIC lag selection.
 *
 * # Safety
 * `series` must hold `n` doubles; `out` writable.
 */
NmStatus nm_adf_test(const double *series, size_t n, size_t max_lag, NmAdfResult *out);

/**
 * Fit `components` PLS components of `y` on `x` (row-major, `n` × `k`).
 *
 * # Safety
 * `x` must hold `n * k` doubles, `y` hold `n`, and `out` be writable.
 */
NmStatus nm_pls_fit(const double *x,
                    size_t n,
                    size_t k,
                    const double *y,
                    size_t components,
                    NmPls **out);

/**
 * # Safety
 * `model` must come from `nm_pls_fit` and not be used afterwards.
 */
void nm_pls_free(NmPls *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
NmStatus nm_pls_components(const NmPls *model, size_t *out);

/**
 * Predictions for `n` new rows (row-major, `n` × features).
 *
 * # Safety
 * `model` must be a live handle, `x` hold `n * features` doubles, `out` hold `n`.
 */
NmStatus nm_pls_predict(const NmPls *model, const double *x, size_t n, double *out);

/**
 * Run the pipeline from `config_path` into `out_dir`. `stage` names one stage
 * or is null for all of them. A negative `seed` keeps the config seeds.
 * Pipeline failures leave the JSON error object in `nm_last_error`.
 *
 * # Safety
 * Strings must be NUL-terminated; `stage` may be null.
 */
NmStatus nm_run_pipeline(const char *config_path,
                         const char *out_dir,
                         const char *stage,
                         int64_t seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEWSMACRO_H */

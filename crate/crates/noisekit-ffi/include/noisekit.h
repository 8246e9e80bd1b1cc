#ifndef NOISEKIT_H
#define NOISEKIT_H

/* Generated by cbindgen from the noisekit-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum {
  NK_STATUS_OK = 0,
  // A required pointer argument was null.
  NK_STATUS_NULL_POINTER = 1,
  // An argument value was rejected before any work started.
  NK_STATUS_INVALID_ARGUMENT = 2,
  // A file could not be read or written.
  NK_STATUS_IO_ERROR = 3,
  // The input data was readable but unusable (wrong format, silent
  // region, infeasible problem, ...).
  NK_STATUS_DATA_ERROR = 4,
  // An internal invariant failed; a bug, not a caller error.
  NK_STATUS_INTERNAL_ERROR = 5,
} NkStatus;

// Opaque WADA gain table handle.
typedef struct NkGainTable NkGainTable;

// Pair evaluation results, mirroring the library's metric report.
typedef struct {
  double gpe;
  double vde;
  double ffe;
  double mcd_db;
  uintptr_t n_frames;
  uintptr_t n_both_voiced;
  uintptr_t n_voicing_errors;
  uintptr_t n_gross_pitch_errors;
} NkMetricReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the most recent error message on this thread into `buffer`
// (NUL-terminated, truncated to `capacity`). Returns the full message
// length in bytes excluding the NUL, or 0 when there is no message.
//
// # Safety
// `buffer` must point to at least `capacity` writable bytes, or be null
// (in which case only the length is returned).
uintptr_t nk_last_error_message(char *buffer, uintptr_t capacity);

// Library version as a static NUL-terminated string.
const char *nk_version(void);

// Builds a gain table by Monte-Carlo simulation (deterministic in
// `seed`). The handle must be freed with [`nk_gain_table_free`].
//
// # Safety
// `out` must be a valid pointer to a table-handle slot.
NkStatus nk_gain_table_build(uint64_t seed, uint64_t samples_per_point, NkGainTable **out);

// Loads a gain table from the JSON produced by [`nk_gain_table_save_json`].
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid slot.
NkStatus nk_gain_table_load_json(const char *path, NkGainTable **out);

// Saves a gain table as JSON for caching.
//
// # Safety
// `table` must be a live handle; `path` a NUL-terminated string.
NkStatus nk_gain_table_save_json(const NkGainTable *table, const char *path);

// Frees a table handle. Null is a no-op.
//
// # Safety
// `table` must have come from this library and not been freed before.
void nk_gain_table_free(NkGainTable *table);

// Blind WADA-SNR estimate over `len` mono samples at any scale.
//
// # Safety
// `samples` must point to `len` readable doubles; output pointers must be
// valid.
NkStatus nk_estimate_snr(const NkGainTable *table,
                         const double *samples,
                         uintptr_t len,
                         double *out_snr_db,
                         bool *out_clipped);

// Blind WADA-SNR estimate over a WAV file.
//
// # Safety
// Pointer arguments as in [`nk_estimate_snr`].
NkStatus nk_estimate_snr_file(const NkGainTable *table,
                              const char *path,
                              double *out_snr_db,
                              bool *out_clipped);

// Mixes `noise` into `speech` at exactly `target_snr_db` over the sample
// region `[region_start, region_start + region_len)`, reading noise from
// `noise_offset`. Writes `speech_len` output samples.
//
// # Safety
// `speech`, `noise`, and `output` must point to buffers of the stated
// lengths; output pointers must be valid.
NkStatus nk_mix_at_snr(const double *speech,
                       uintptr_t speech_len,
                       const double *noise,
                       uintptr_t noise_len,
                       uint32_t sample_rate,
                       double target_snr_db,
                       uintptr_t region_start,
                       uintptr_t region_len,
                       uintptr_t noise_offset,
                       double *output,
                       double *out_realized_snr_db,
                       bool *out_clipped);

// CTC loss (and optionally the gradient) for a `n_frames` x `n_classes`
// row-major log-probability matrix whose last column is the blank.
// `out_grad` may be null when only the loss is wanted; otherwise it
// receives `n_frames * n_classes` values.
//
// # Safety
// Matrix and label pointers must cover the stated extents.
NkStatus nk_ctc_loss(const double *log_probs,
                     uintptr_t n_frames,
                     uintptr_t n_classes,
                     const uint32_t *labels,
                     uintptr_t n_labels,
                     double *out_loss,
                     double *out_grad);

// Closed-form KL divergence from a diagonal Gaussian to the standard
// normal.
//
// # Safety
// `mean` and `log_variance` must each point to `dims` doubles.
NkStatus nk_kl_to_standard_normal(const double *mean,
                                  const double *log_variance,
                                  uintptr_t dims,
                                  double *out);

// Mean-pooling probability of the utterance-to-frame schedule.
//
// # Safety
// `out` must be a valid pointer.
NkStatus nk_pooling_probability(uint64_t step, uint64_t start_step, uint64_t end_step, double *out);

// Learning rate at `step`: linear 3e-3 -> 3e-5 over the first 100000
// steps, constant afterwards.
double nk_learning_rate(uint64_t step);

// Scores a candidate WAV against a reference WAV (MCD with DTW plus the
// GPE/VDE/FFE pitch suite) using the default analysis setup.
//
// # Safety
// Paths must be NUL-terminated strings; `out` must be valid.
NkStatus nk_evaluate_pair(const char *ref_path, const char *cand_path, NkMetricReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOISEKIT_H */

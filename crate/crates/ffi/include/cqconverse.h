#ifndef CQCONVERSE_H
#define CQCONVERSE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CqcStatus {
  CQC_STATUS_OK = 0,
  CQC_STATUS_NULL_POINTER = 1,
  CQC_STATUS_INVALID_INPUT = 2,
  CQC_STATUS_NOT_PSD = 3,
  CQC_STATUS_DIMENSION_LIMIT = 4,
  /**
   * Results were written but the optimizer could not certify them.
   */
  CQC_STATUS_NOT_CONVERGED = 5,
  CQC_STATUS_IO = 6,
  CQC_STATUS_PANIC = 7,
} CqcStatus;

/**
 * Opaque channel handle.
 */
typedef struct CqcChannel CqcChannel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a channel from JSON text (`{"dim": d, "states": [...]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CqcStatus cqc_channel_from_json(const char *json, struct CqcChannel **out);

/**
 * Loads a channel file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CqcStatus cqc_channel_load(const char *path, struct CqcChannel **out);

/**
 * Builds a channel from `count` row-major `dim x dim` matrices laid out
 * back to back. `im` may be null for real states.
 *
 * # Safety
 * `re` (and `im` when non-null) must hold `count * dim * dim` doubles.
 */
enum CqcStatus cqc_channel_new(size_t dim,
                               size_t count,
                               const double *re,
                               const double *im,
                               struct CqcChannel **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `ch` must come from a `cqc_channel_*` constructor and not be used again.
 */
void cqc_channel_free(struct CqcChannel *ch);

/**
 * # Safety
 * `ch` must be a live handle and `out` writable.
 */
enum CqcStatus cqc_channel_dim(const struct CqcChannel *ch, size_t *out);

/**
 * # Safety
 * `ch` must be a live handle and `out` writable.
 */
enum CqcStatus cqc_channel_alphabet_size(const struct CqcChannel *ch, size_t *out);

/**
 * Mutual information `I(π)` in nats.
 *
 * # Safety
 * `prior_probs` must hold `len` doubles and `out` be writable.
 */
enum CqcStatus cqc_mutual_info(const struct CqcChannel *ch,
                               const double *prior_probs,
                               size_t len,
                               double *out);

/**
 * `E₀(s, π)` for `s ∈ (−1, 0]`.
 *
 * # Safety
 * `prior_probs` must hold `len` doubles and `out` be writable.
 */
enum CqcStatus cqc_e0(const struct CqcChannel *ch,
                      const double *prior_probs,
                      size_t len,
                      double s,
                      double *out);

/**
 * Capacity in nats. `out_prior` may be null; otherwise it receives the
 * optimal prior (alphabet size entries).
 *
 * # Safety
 * `out` must be writable; `out_prior`, when non-null, must have room for
 * the alphabet size.
 */
enum CqcStatus cqc_capacity(const struct CqcChannel *ch, double *out, double *out_prior);

/**
 * `min_π E₀(s, π)`. `out_prior` may be null.
 *
 * # Safety
 * As for `cqc_capacity`.
 */
enum CqcStatus cqc_min_e0(const struct CqcChannel *ch, double s, double *out, double *out_prior);

/**
 * Strong-converse exponent `sup_s [−sR + min_π E₀(s, π)]` at `rate` (nats)
 * over the default grid. `out_s_star` may be null.
 *
 * # Safety
 * `ch` must be a live handle; `out` writable.
 */
enum CqcStatus cqc_sc_exponent(const struct CqcChannel *ch,
                               double rate,
                               double *out,
                               double *out_s_star);

/**
 * Error lower bound `1 − exp(−n(−sR + min_π E₀(s, π)))` for block length `n`.
 *
 * # Safety
 * `ch` must be a live handle; `out` writable.
 */
enum CqcStatus cqc_theorem1_bound(const struct CqcChannel *ch,
                                  size_t n,
                                  double rate,
                                  double s,
                                  double *out);

/**
 * Per-codebook error lower bound. `words` holds `m` codewords of length `n`
 * back to back, letters 0-based.
 *
 * # Safety
 * `words` must hold `m * n` entries and `out` be writable.
 */
enum CqcStatus cqc_lemma1_bound(const struct CqcChannel *ch,
                                size_t n,
                                const size_t *words,
                                size_t m,
                                double beta,
                                double *out);

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cqc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cqc_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CQCONVERSE_H */

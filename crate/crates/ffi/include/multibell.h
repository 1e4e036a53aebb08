#ifndef MULTIBELL_H
#define MULTIBELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_DOMAIN = 2,
  MB_STATUS_CAPACITY = 3,
  MB_STATUS_DEGENERATE = 4,
  MB_STATUS_UNSUPPORTED = 5,
  MB_STATUS_INVALID_STATE = 6,
  MB_STATUS_NON_CONVERGENCE = 7,
  MB_STATUS_IO = 8,
  MB_STATUS_BUFFER_TOO_SMALL = 9,
  MB_STATUS_PANIC = 10,
} MbStatus;

/**
 * Opaque two-qubit density matrix.
 */
typedef struct MbState MbState;

/**
 * Opaque pair of setting lists.
 */
typedef struct MbStrategy MbStrategy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL,
 * or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t mb_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mb_version(void);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MbStatus mb_state_singlet(struct MbState **out);

/**
 * Werner state `p |singlet><singlet| + (1 - p) I/4`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MbStatus mb_state_werner(double p, struct MbState **out);

/**
 * # Safety
 * `state` must be null or a handle from this library, not yet freed.
 */
void mb_state_free(struct MbState *state);

/**
 * `<a.sigma (x) b.sigma>`; `a` and `b` point to 3 doubles each.
 *
 * # Safety
 * All pointers must be valid; `state` must be a live handle.
 */
enum MbStatus mb_state_correlator(const struct MbState *state,
                                  const double *a,
                                  const double *b,
                                  double *out);

/**
 * The `n!`-saturating settings.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MbStatus mb_strategy_saturating(size_t n, struct MbStrategy **out);

/**
 * Strategy from `n` unit vectors per party, each stored as 3 consecutive
 * doubles.
 *
 * # Safety
 * `alice` and `bob` must point to `3 n` doubles; `out` must be valid.
 */
enum MbStatus mb_strategy_new(size_t n,
                              const double *alice,
                              const double *bob,
                              struct MbStrategy **out);

/**
 * Number of settings per party, or 0 for a null handle.
 *
 * # Safety
 * `strategy` must be null or a live handle.
 */
size_t mb_strategy_n(const struct MbStrategy *strategy);

/**
 * Writes Alice's (`party = 0`) or Bob's (`party = 1`) settings as `3 n`
 * doubles.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum MbStatus mb_strategy_settings(const struct MbStrategy *strategy,
                                   uint32_t party,
                                   double *out,
                                   size_t len);

/**
 * `B_n` of a strategy on a state. Factors are copied when `factors` is
 * non-null and `factors_len >= n`.
 *
 * # Safety
 * Handles must be live; `factors` must be null or hold `factors_len` doubles.
 */
enum MbStatus mb_strategy_evaluate(const struct MbStrategy *strategy,
                                   const struct MbState *state,
                                   double *value,
                                   double *factors,
                                   size_t factors_len);

/**
 * # Safety
 * `strategy` must be null or a handle from this library, not yet freed.
 */
void mb_strategy_free(struct MbStrategy *strategy);

/**
 * Classical maximum of `B'_n` by enumeration (`2 <= n <= 12`).
 *
 * # Safety
 * `out` must be valid.
 */
enum MbStatus mb_classical_additive(size_t n, int64_t *out);

/**
 * Largest `|B_n|` over deterministic strategies (`2 <= n <= 12`).
 *
 * # Safety
 * `out` must be valid.
 */
enum MbStatus mb_classical_vertex(size_t n, int64_t *out);

/**
 * Best fully deterministic value: its cutoff, natural log (`-inf` for 0)
 * and value as a double (`inf` once it overflows).
 *
 * # Safety
 * Output pointers must be valid.
 */
enum MbStatus mb_fd_max(size_t n, size_t *i_c, double *ln_value, double *value);

/**
 * `FD_n / n!`.
 *
 * # Safety
 * `out` must be valid.
 */
enum MbStatus mb_fd_ratio(size_t n, double *out);

/**
 * CHSH bound for a complex local correlation.
 *
 * # Safety
 * `out` must be valid.
 */
enum MbStatus mb_chsh_bound(double eta_re, double eta_im, double *out);

/**
 * General and maximally-entangled `B_2` bounds for real `eta`.
 *
 * # Safety
 * Output pointers must be valid.
 */
enum MbStatus mb_b2_bounds(double eta, double *general, double *maxent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTIBELL_H */

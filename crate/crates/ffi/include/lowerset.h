#ifndef LOWERSET_H
#define LOWERSET_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_PARSE = 3,
  LS_STATUS_NOT_ADMISSIBLE = 4,
  LS_STATUS_MEMORY_CAP = 5,
  LS_STATUS_DIVERGENT = 6,
  LS_STATUS_NOT_CERTIFIED = 7,
  LS_STATUS_IO = 8,
  LS_STATUS_PANIC = 9,
} LsStatus;

/**
 * A lower set in canonical order.
 */
typedef struct LsLowerSet LsLowerSet;

/**
 * An admissible sequence `rho`.
 */
typedef struct LsSequence LsSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call.
 */
const char *ls_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ls_string_free(char *s);

/**
 * Parses `poly:s=<s>`, `dyadic:s=<s>` or `custom:file=<path>`.
 *
 * # Safety
 * `spec` must be a nul-terminated string, `out` a valid pointer.
 */
enum LsStatus ls_sequence_new(const char *spec, struct LsSequence **out);

/**
 * # Safety
 * `seq` must be null or a handle from [`ls_sequence_new`].
 */
void ls_sequence_free(struct LsSequence *seq);

/**
 * `Lambda(eps, rho)`. `mem_cap = 0` selects the default cap.
 *
 * # Safety
 * `seq` must be a live handle, `out` a valid pointer.
 */
enum LsStatus ls_lambda_build_eps(const struct LsSequence *seq,
                                  double eps,
                                  size_t mem_cap,
                                  struct LsLowerSet **out);

/**
 * The optimal `n`-term set `Lambda_n`.
 *
 * # Safety
 * `seq` must be a live handle, `out` a valid pointer.
 */
enum LsStatus ls_lambda_build_n(const struct LsSequence *seq,
                                size_t n,
                                size_t mem_cap,
                                struct LsLowerSet **out);

/**
 * # Safety
 * `set` must be a live handle, `out` a valid pointer.
 */
enum LsStatus ls_lambda_len(const struct LsLowerSet *set, size_t *out);

/**
 * The `i`-th member (0-based) as `coord:exp` pairs, `"0"` for the zero
 * index. Free the string with [`ls_string_free`].
 *
 * # Safety
 * `set` must be a live handle, `out` a valid pointer.
 */
enum LsStatus ls_lambda_index(const struct LsLowerSet *set, size_t i, char **out);

/**
 * # Safety
 * `set` must be null or a handle from `ls_lambda_build_*`.
 */
void ls_lambda_free(struct LsLowerSet *set);

/**
 * `#Lambda(2^{-m}, rho*(1))` as a decimal string.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LsStatus ls_exact_lambda_count(uint32_t m, char **out);

/**
 * CSV with columns `m, cardinality` for `m = 0..=mmax`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LsStatus ls_counts_csv(uint32_t mmax, char **out);

/**
 * `delta_n`, the `n`-th largest `rho^{-nu}` (`n >= 1`).
 *
 * # Safety
 * `seq` must be a live handle, `out` a valid pointer.
 */
enum LsStatus ls_delta(const struct LsSequence *seq, size_t n, size_t mem_cap, double *out);

/**
 * `delta_{n,q}` with its certified absolute error; `q` may be `INFINITY`.
 *
 * # Safety
 * `seq` must be a live handle, `value` and `error` valid pointers.
 */
enum LsStatus ls_tail_norm(const struct LsSequence *seq,
                           size_t n,
                           double q,
                           double *value,
                           double *error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOWERSET_H */

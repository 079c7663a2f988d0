#ifndef PACKING_BB_H
#define PACKING_BB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PbNodeRule {
  PB_NODE_RULE_BEST_BOUND = 0,
  PB_NODE_RULE_DEPTH_FIRST = 1,
} PbNodeRule;

/**
 * Status codes returned by every fallible call.
 */
typedef enum PbStatus {
  PB_STATUS_OK = 0,
  PB_STATUS_NULL_POINTER = 1,
  PB_STATUS_INVALID_ARGUMENT = 2,
  PB_STATUS_PARSE = 3,
  PB_STATUS_IO = 4,
  /**
   * Numerical failure of the LP solver (iteration cap, singular basis).
   */
  PB_STATUS_LP = 5,
  /**
   * Input exceeds an enumeration cap.
   */
  PB_STATUS_CAP_EXCEEDED = 6,
  /**
   * A checked property failed (for example the best-bound check).
   */
  PB_STATUS_ASSERTION = 7,
  PB_STATUS_PANIC = 8,
} PbStatus;

typedef enum PbVarRule {
  PB_VAR_RULE_FIRST = 0,
  PB_VAR_RULE_MOST_FRACTIONAL = 1,
  PB_VAR_RULE_RANDOM = 2,
  PB_VAR_RULE_ADVERSARIAL_REPLAY = 3,
} PbVarRule;

/**
 * Opaque branch-and-bound result.
 */
typedef struct PbBbResult PbBbResult;

/**
 * Opaque packing instance.
 */
typedef struct PbInstance PbInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *pb_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *pb_version(void);

/**
 * Draws a random instance. `beta` holds `beta_len` values, either 1 or `m`.
 *
 * # Safety
 * `beta` must point to `beta_len` doubles; `out` must be writable.
 */
enum PbStatus pb_instance_generate(size_t m,
                                   size_t n,
                                   const double *beta,
                                   size_t beta_len,
                                   uint64_t seed,
                                   struct PbInstance **out);

/**
 * Builds an instance from explicit data; `a` is row-major `m x n`.
 *
 * # Safety
 * `a`, `c`, `b` must point to `m*n`, `n` and `m` doubles; `out` must be writable.
 */
enum PbStatus pb_instance_new(size_t m,
                              size_t n,
                              const double *a,
                              const double *c,
                              const double *b,
                              struct PbInstance **out);

/**
 * Loads an instance file. Load warnings are not reported.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum PbStatus pb_instance_load(const char *path_ptr, struct PbInstance **out);

/**
 * Writes an instance file.
 *
 * # Safety
 * `inst` must come from this library; `path` must be nul-terminated.
 */
enum PbStatus pb_instance_save(const struct PbInstance *inst, const char *path_ptr);

/**
 * Releases an instance; null is ignored.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void pb_instance_free(struct PbInstance *inst);

/**
 * # Safety
 * `inst` must come from this library; `m` and `n` must be writable.
 */
enum PbStatus pb_instance_dims(const struct PbInstance *inst, size_t *m, size_t *n);

/**
 * Root LP relaxation value.
 *
 * # Safety
 * `inst` must come from this library; `out` must be writable.
 */
enum PbStatus pb_lp_value(const struct PbInstance *inst, double *out);

/**
 * Exhaustive IP optimum (`n <= 25`). `solution` receives `n` bytes if non-null.
 *
 * # Safety
 * `inst` must come from this library; `value` must be writable; `solution`
 * is null or points to `n` bytes.
 */
enum PbStatus pb_ip_opt(const struct PbInstance *inst, double *value, uint8_t *solution);

/**
 * Runs branch and bound. `seed` is used by the random rule, `script` by
 * adversarial replay. `node_budget = 0` selects the default budget; a run that
 * hits the budget still returns `Ok` with `pb_result_completed() == false`.
 *
 * # Safety
 * `inst` must come from this library; `script` must point to `script_len`
 * values; `out` must be writable.
 */
enum PbStatus pb_solve(const struct PbInstance *inst,
                       enum PbVarRule var_rule,
                       uint64_t seed,
                       const size_t *script,
                       size_t script_len,
                       enum PbNodeRule node_rule,
                       size_t node_budget,
                       struct PbBbResult **out);

/**
 * Releases a result; null is ignored.
 *
 * # Safety
 * `res` must come from this library and not be used afterwards.
 */
void pb_result_free(struct PbBbResult *res);

/**
 * False when the node budget ran out (or `res` is null).
 *
 * # Safety
 * `res` is null or comes from this library.
 */
bool pb_result_completed(const struct PbBbResult *res);

/**
 * Optimal value; `InvalidArgument` if no incumbent was found.
 *
 * # Safety
 * `res` must come from this library; `out` must be writable.
 */
enum PbStatus pb_result_opt_value(const struct PbBbResult *res, double *out);

/**
 * Copies the optimal 0/1 vector into `buf` (`len` must be at least `n`).
 *
 * # Safety
 * `res` must come from this library; `buf` must point to `len` bytes.
 */
enum PbStatus pb_result_solution(const struct PbBbResult *res, uint8_t *buf, size_t len);

/**
 * Number of tree nodes; 0 for null.
 *
 * # Safety
 * `res` is null or comes from this library.
 */
size_t pb_result_node_count(const struct PbBbResult *res);

/**
 * Number of branched nodes; 0 for null.
 *
 * # Safety
 * `res` is null or comes from this library.
 */
size_t pb_result_branched_count(const struct PbBbResult *res);

/**
 * Tree in the line format `id parent status branch_var lp_value depth`.
 *
 * # Safety
 * `res` must come from this library; `out` must be writable. Free the string
 * with `pb_string_free`.
 */
enum PbStatus pb_result_tree_dump(const struct PbBbResult *res, char **out);

/**
 * JSON summary (counts, optimum, incumbent trace).
 *
 * # Safety
 * `res` must come from this library; `out` must be writable. Free the string
 * with `pb_string_free`.
 */
enum PbStatus pb_result_summary_json(const struct PbBbResult *res, char **out);

/**
 * Good-set census as JSON. `cap = 0` selects the default cap; larger `n`
 * returns `CapExceeded`.
 *
 * # Safety
 * `inst` must come from this library; `out` must be writable. Free the string
 * with `pb_string_free`.
 */
enum PbStatus pb_census_json(const struct PbInstance *inst, size_t cap, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void pb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACKING_BB_H */

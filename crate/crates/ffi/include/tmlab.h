/* C interface to the tmlab transactional-memory laboratory. */

#ifndef TMLAB_H
#define TMLAB_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/* Opaque handles: create with the matching *_parse function, release with
 * the matching *_free function. */
typedef struct TmlabHistory TmlabHistory;
typedef struct TmlabExecution TmlabExecution;

/**
 * Result of every call across this ABI.
 */
typedef enum {
  TMLAB_STATUS_OK = 0,
  TMLAB_STATUS_VIOLATION = 1,
  TMLAB_STATUS_REFUSED = 2,
  TMLAB_STATUS_INVALID_ARGUMENT = 3,
  TMLAB_STATUS_INTERNAL = 4,
} TmlabStatus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The library version as a static NUL-terminated string. Do not free.
 */
const char *tmlab_version(void);

/**
 * Release a string returned by any function of this library.
 *
 * # Safety
 * `s` must be a pointer previously returned through a `char **out`
 * parameter of this library (or null, which is ignored), and must not be
 * used afterwards.
 */
void tmlab_string_free(char *s);

/**
 * Parse a history from JSON: either an array of operation records
 * `{txn, kind, object, arg, outcome, invSeq, respSeq}` or an object
 * `{"initial": {...}, "events": [...]}` that also sets initial t-object
 * values. On success `*out` owns the handle; free it with
 * [`tmlab_history_free`].
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
TmlabStatus tmlab_history_parse(const char *json, TmlabHistory **out);

/**
 * Release a history handle.
 *
 * # Safety
 * `h` must come from [`tmlab_history_parse`] (or be null) and must not
 * be used afterwards.
 */
void tmlab_history_free(TmlabHistory *h);

/**
 * Number of transactions in the history; 0 for null.
 *
 * # Safety
 * `h` must be a live handle from [`tmlab_history_parse`] or null.
 */
size_t tmlab_history_txn_count(const TmlabHistory *h);

/**
 * Parse an execution log from JSONL (one event per line). On success
 * `*out` owns the handle; free it with [`tmlab_execution_free`].
 *
 * # Safety
 * `jsonl` must be a valid NUL-terminated string and `out` a valid
 * pointer.
 */
TmlabStatus tmlab_execution_parse(const char *jsonl, TmlabExecution **out);

/**
 * Release an execution handle.
 *
 * # Safety
 * `e` must come from [`tmlab_execution_parse`] (or be null) and must not
 * be used afterwards.
 */
void tmlab_execution_free(TmlabExecution *e);

/**
 * Number of events in the execution; 0 for null.
 *
 * # Safety
 * `e` must be a live handle from [`tmlab_execution_parse`] or null.
 */
size_t tmlab_execution_event_count(const TmlabExecution *e);

/**
 * Check a property of a parsed history. `property` is one of `opacity`,
 * `strict-ser`, `prog`, `strong-prog`; `bound` caps the exhaustive
 * searches (0 = default). `*out_json` receives the JSON report.
 *
 * # Safety
 * `h` must be a live handle, `property` a valid NUL-terminated string,
 * and `out_json` a valid pointer (or null to discard the report).
 */
TmlabStatus tmlab_check_history(const TmlabHistory *h,
                                const char *property,
                                size_t bound,
                                char **out_json);

/**
 * Check a property of a parsed execution log. Supports every history
 * property (the history is derived first) plus the access-level ones:
 * `weak-dap` and `inv-reads`.
 *
 * # Safety
 * `e` must be a live handle, `property` a valid NUL-terminated string,
 * and `out_json` a valid pointer (or null to discard the report).
 */
TmlabStatus tmlab_check_execution(const TmlabExecution *e,
                                  const char *property,
                                  size_t bound,
                                  char **out_json);

/**
 * Measure per-read step counts across growing fresh read chains driven
 * against the named TM (`"ref"` or `"sp1"`); `m` is the chain length.
 * `*out_json` receives the cost report.
 *
 * # Safety
 * `tm` must be a valid NUL-terminated string and `out_json` a valid
 * pointer (or null to discard the report).
 */
TmlabStatus tmlab_lowerbound_quadratic(const char *tm, size_t m, char **out_json);

/**
 * Measure the distinct base objects under the final read of invalidated
 * read chains driven against the named TM.
 *
 * # Safety
 * `tm` must be a valid NUL-terminated string and `out_json` a valid
 * pointer (or null to discard the report).
 */
TmlabStatus tmlab_lowerbound_space(const char *tm, size_t m, char **out_json);

/**
 * Run the TM-backed lock: `n` processes × `passes` passages under a
 * round-robin schedule, with at most `max_steps` steps (0 = a generous
 * default). `*out_json` receives the per-passage RMR report.
 *
 * # Safety
 * `out_json` must be a valid pointer (or null to discard the report).
 */
TmlabStatus tmlab_mutex_run(uint32_t n, uint32_t passes, uint64_t max_steps, char **out_json);

/**
 * Model-check mutual exclusion of the TM-backed lock over every
 * interleaving of `n` processes × `passes` passages, visiting at most
 * `max_states` states (0 = a generous default). `*out_json` receives
 * either exploration statistics or a counterexample schedule.
 *
 * # Safety
 * `out_json` must be a valid pointer (or null to discard the report).
 */
TmlabStatus tmlab_mutex_explore(uint32_t n, uint32_t passes, uint64_t max_states, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TMLAB_H */

#ifndef OEE_H
#define OEE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OeeStatus {
  OEE_STATUS_OK = 0,
  OEE_STATUS_NULL_ARGUMENT = 1,
  OEE_STATUS_INVALID_UTF8 = 2,
  OEE_STATUS_PARSE = 3,
  OEE_STATUS_CONFIG = 4,
  OEE_STATUS_DOMAIN = 5,
  OEE_STATUS_PANIC = 6,
} OeeStatus;

/*
 A parsed formula.
 */
typedef struct OeeFormula OeeFormula;

/*
 A validated scenario.
 */
typedef struct OeeScenario OeeScenario;

/*
 The event trace of one run.
 */
typedef struct OeeTrace OeeTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or NULL if none. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *oee_last_error(void);

/*
 # Safety
 `s` must be NULL or a string returned by this library and not yet freed.
 */
void oee_string_free(char *s);

/*
 Parses `text` into a new formula handle.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OeeStatus oee_formula_parse(const char *text, struct OeeFormula **out);

/*
 Canonical rendering of a formula.

 # Safety
 `formula` must be a live handle and `out` a valid pointer.
 */
enum OeeStatus oee_formula_render(const struct OeeFormula *formula, char **out);

/*
 Modal depth of a formula.

 # Safety
 `formula` must be a live handle and `out` a valid pointer.
 */
enum OeeStatus oee_formula_depth(const struct OeeFormula *formula, uint32_t *out);

/*
 # Safety
 `formula` must be NULL or a handle from [`oee_formula_parse`] not yet freed.
 */
void oee_formula_free(struct OeeFormula *formula);

/*
 Validates a scenario given as JSON text.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OeeStatus oee_scenario_from_json(const char *json, struct OeeScenario **out);

/*
 # Safety
 `scenario` must be NULL or a handle from [`oee_scenario_from_json`] not yet freed.
 */
void oee_scenario_free(struct OeeScenario *scenario);

/*
 Runs one replicate of a scenario.

 # Safety
 `scenario` must be a live handle and `out` a valid pointer.
 */
enum OeeStatus oee_run(const struct OeeScenario *scenario,
                       uint64_t replicate,
                       struct OeeTrace **out);

/*
 Number of events in a trace.

 # Safety
 `trace` must be a live handle and `out` a valid pointer.
 */
enum OeeStatus oee_trace_len(const struct OeeTrace *trace, uintptr_t *out);

/*
 The trace as JSONL, one event per line.

 # Safety
 `trace` must be a live handle and `out` a valid pointer.
 */
enum OeeStatus oee_trace_to_jsonl(const struct OeeTrace *trace, char **out);

/*
 # Safety
 `trace` must be NULL or a handle from [`oee_run`] not yet freed.
 */
void oee_trace_free(struct OeeTrace *trace);

/*
 Common knowledge of `formula` at the state `at` (a bit string) of the
 frame described by `frame_json`. Writes a JSON object with an `outcome`
 of `holds`, `fails_at` or `infeasible`.

 # Safety
 All string arguments must be NUL-terminated and `out` a valid pointer.
 */
enum OeeStatus oee_check(const char *frame_json, const char *formula, const char *at, char **out);

/*
 Agreement report for the event in `event_json` over the frame in
 `frame_json`, as JSON.

 # Safety
 All string arguments must be NUL-terminated and `out` a valid pointer.
 */
enum OeeStatus oee_agree(const char *frame_json, const char *event_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OEE_H */

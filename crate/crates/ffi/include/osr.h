#ifndef OSR_H
#define OSR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OsrStatus {
  OSR_STATUS_OK = 0,
  OSR_STATUS_NULL_POINTER = 1,
  OSR_STATUS_INVALID_UTF8 = 2,
  OSR_STATUS_PARSE = 3,
  OSR_STATUS_ILL_FORMED = 4,
  OSR_STATUS_OUT_OF_RANGE = 5,
  OSR_STATUS_NOT_CONFLICTING = 6,
  OSR_STATUS_PANIC = 7,
} OsrStatus;

typedef enum OsrMode {
  OSR_MODE_EVENTS = 0,
  OSR_MODE_LOCATIONS = 1,
  OSR_MODE_VARIABLES = 2,
} OsrMode;

// Result of [`osr_detect`]. Opaque to C.
typedef struct OsrReport OsrReport;

// A parsed, indexed trace. Opaque to C.
typedef struct OsrTrace OsrTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The string
// stays valid until the next call into this library from the same thread.
const char *osr_last_error(void);

// Parses and indexes a NUL-terminated trace.
//
// # Safety
// `text` must be NULL or a valid NUL-terminated string. `out` must be NULL
// or point to writable storage for one pointer.
enum OsrStatus osr_trace_parse(const char *text, struct OsrTrace **out);

// # Safety
// `trace` must be NULL or a pointer from [`osr_trace_parse`] not yet freed.
void osr_trace_free(struct OsrTrace *trace);

// Number of events, or 0 for NULL.
//
// # Safety
// `trace` must be NULL or a live trace handle.
size_t osr_trace_len(const struct OsrTrace *trace);

// Decides whether events `e1` and `e2` (1-based) race.
//
// # Safety
// `trace` must be NULL or a live trace handle. `race` must be NULL or
// point to a writable `bool`.
enum OsrStatus osr_check_pair(const struct OsrTrace *trace, size_t e1, size_t e2, bool *race);

// Runs whole-trace detection. With `all_pairs` every racing pair is kept,
// otherwise only the first partner per event and thread.
//
// # Safety
// `trace` must be NULL or a live trace handle. `out` must be NULL or point
// to writable storage for one pointer.
enum OsrStatus osr_detect(const struct OsrTrace *trace, bool all_pairs, struct OsrReport **out);

// # Safety
// `report` must be NULL or a live report handle.
size_t osr_report_pair_count(const struct OsrReport *report);

// Distinct racy events, locations or variables.
//
// # Safety
// `report` must be NULL or a live report handle.
size_t osr_report_count(const struct OsrReport *report, enum OsrMode mode);

// The `i`-th pair (0-based), as 1-based event numbers, earlier first.
//
// # Safety
// `report` must be NULL or a live report handle. `e1` and `e2` must be
// NULL or point to writable `size_t` storage.
enum OsrStatus osr_report_pair(const struct OsrReport *report, size_t i, size_t *e1, size_t *e2);

// # Safety
// `report` must be NULL or a pointer from [`osr_detect`] not yet freed.
void osr_report_free(struct OsrReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSR_H */

#ifndef SSMLAB_H
#define SSMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsmlabStatus {
  SSMLAB_STATUS_OK = 0,
  SSMLAB_STATUS_NULL_POINTER = 1,
  SSMLAB_STATUS_INVALID_UTF8 = 2,
  /*
   Bad config document or failed validation.
   */
  SSMLAB_STATUS_CONFIG = 3,
  /*
   The simulation or analysis failed.
   */
  SSMLAB_STATUS_RUN = 4,
  SSMLAB_STATUS_INVALID_ARGUMENT = 5,
  /*
   Requested metric or scenario does not exist.
   */
  SSMLAB_STATUS_NOT_FOUND = 6,
  SSMLAB_STATUS_PANIC = 7,
} SsmlabStatus;

/*
 Opaque scenario report.
 */
typedef struct SsmlabReport SsmlabReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *ssmlab_last_error(void);

/*
 # Safety
 `s` must be null or a string returned by this library, freed once.
 */
void ssmlab_string_free(char *s);

/*
 JSON array of `{name, description}` for every scenario.

 # Safety
 `out` must be a valid pointer.
 */
enum SsmlabStatus ssmlab_list_scenarios(char **out);

/*
 Validate a config document. Returns `Ok` when valid; otherwise `Config`
 and, if `problems` is non-null, a JSON array of messages through it.

 # Safety
 `json` must be a NUL-terminated string; `problems` null or valid.
 */
enum SsmlabStatus ssmlab_validate_config_json(const char *json, char **problems);

/*
 Run a scenario. `config_json` (nullable) is overlaid on the preset and
 must then contain a seed; `out_dir` (nullable) receives the artifacts.
 A report is returned even when thresholds fail; check
 [`ssmlab_report_passed`].

 # Safety
 String arguments must be null (where allowed) or NUL-terminated; `out`
 must be valid.
 */
enum SsmlabStatus ssmlab_run_scenario(const char *name,
                                      const char *config_json,
                                      const char *out_dir,
                                      struct SsmlabReport **out);

/*
 # Safety
 `report` must be null or returned by [`ssmlab_run_scenario`], freed once.
 */
void ssmlab_report_free(struct SsmlabReport *report);

/*
 # Safety
 Pointers must be valid.
 */
enum SsmlabStatus ssmlab_report_passed(const struct SsmlabReport *report, bool *passed);

/*
 # Safety
 Pointers must be valid.
 */
enum SsmlabStatus ssmlab_report_metric_count(const struct SsmlabReport *report, size_t *count);

/*
 Value of a named metric. `passed` (nullable) receives 1 or 0 for checked
 metrics and -1 for informational ones.

 # Safety
 `report` and `value` must be valid; `name` NUL-terminated.
 */
enum SsmlabStatus ssmlab_report_metric(const struct SsmlabReport *report,
                                       const char *name,
                                       double *value,
                                       int32_t *passed);

/*
 The full report as JSON.

 # Safety
 Pointers must be valid.
 */
enum SsmlabStatus ssmlab_report_json(const struct SsmlabReport *report, char **out);

/*
 Amplitude factor `exp(-gamma*phi^2)`.
 */
double ssmlab_decoherence_envelope(double phi, double gamma);

/*
 Spatial fidelity of two row-major `ny x nx` intensity maps over the
 whole map.

 # Safety
 `i` and `i0` must each point to `nx*ny` doubles; `out` must be valid.
 */
enum SsmlabStatus ssmlab_overlap_fidelity(const double *i,
                                          const double *i0,
                                          size_t nx,
                                          size_t ny,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSMLAB_H */

#ifndef ACCEPTGEN_H
#define ACCEPTGEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every call.
 */
typedef enum AgStatus {
  AG_STATUS_OK = 0,
  AG_STATUS_NULL_ARGUMENT = 1,
  AG_STATUS_INVALID_UTF8 = 2,
  AG_STATUS_CONFIG = 3,
  AG_STATUS_INGEST = 4,
  AG_STATUS_UNKNOWN_PAGE = 5,
  AG_STATUS_NO_WORK = 6,
  AG_STATUS_PROVIDER = 7,
  AG_STATUS_TEMPLATE = 8,
  AG_STATUS_UI_TEST = 9,
  AG_STATUS_IO = 10,
  /*
   The input was read but breaks a rule; details are in the JSON output.
   */
  AG_STATUS_VIOLATIONS = 11,
  AG_STATUS_PANIC = 12,
} AgStatus;

/*
 Opaque pipeline configuration.
 */
typedef struct AgConfig AgConfig;

/*
 Opaque result of a pipeline run.
 */
typedef struct AgReport AgReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. The pointer
 stays valid until the next call on the same thread.
 */
const char *ag_last_error(void);

/*
 Library version, static storage.
 */
const char *ag_version(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void ag_string_free(char *s);

/*
 Loads a TOML configuration file. Relative paths inside it resolve
 against the file's directory.

 # Safety
 `path` must be a NUL-terminated string; `out` a writable pointer.
 */
enum AgStatus ag_config_load(const char *path, struct AgConfig **out);

/*
 Parses configuration text, resolving relative paths against `base_dir`.

 # Safety
 String arguments must be NUL-terminated; `out` a writable pointer.
 */
enum AgStatus ag_config_from_toml(const char *text, const char *base_dir, struct AgConfig **out);

/*
 Redirects artifacts of later runs to `dir`.

 # Safety
 `cfg` must be a live handle; `dir` NUL-terminated.
 */
enum AgStatus ag_config_set_output_dir(struct AgConfig *cfg, const char *dir);

/*
 Checks the configuration without running anything.

 # Safety
 `cfg` must be a live handle.
 */
enum AgStatus ag_config_validate(const struct AgConfig *cfg);

/*
 # Safety
 `cfg` must come from this library and not have been freed. Null is ignored.
 */
void ag_config_free(struct AgConfig *cfg);

/*
 Runs the pipeline for one issue. `issue` is the issue JSON and
 `changes` either change-set JSON or a newline-separated path list.
 Failures that still write a report (no work, provider failure) return
 their status with `out` left null.

 # Safety
 `cfg` must be a live handle, strings NUL-terminated, `out` writable.
 */
enum AgStatus ag_run(const struct AgConfig *cfg,
                     const char *issue,
                     const char *changes,
                     bool dry_run,
                     bool install,
                     struct AgReport **out);

/*
 The run report as JSON. Free the result with [`ag_string_free`].

 # Safety
 `report` must be a live handle; `out` writable.
 */
enum AgStatus ag_report_json(const struct AgReport *report, char **out);

/*
 Directory the run wrote to. Free the result with [`ag_string_free`].

 # Safety
 `report` must be a live handle; `out` writable.
 */
enum AgStatus ag_report_out_dir(const struct AgReport *report, char **out);

/*
 # Safety
 `report` must come from this library and not have been freed. Null is ignored.
 */
void ag_report_free(struct AgReport *report);

/*
 Ranked navigation paths from the entry page to `target`, as text.

 # Safety
 `cfg` must be a live handle, `target` NUL-terminated, `out` writable.
 */
enum AgStatus ag_explain(const struct AgConfig *cfg, const char *target, char **out);

/*
 Validates a Gherkin feature. `out` receives the parsed feature as JSON
 on success, or the violation list with [`AgStatus::Violations`].

 # Safety
 `text` must be NUL-terminated; `out` writable.
 */
enum AgStatus ag_validate_feature(const char *text, char **out);

/*
 Lints page-object source against the default conventions. `out`
 receives the violation list as JSON, empty when compliant.

 # Safety
 `text` must be NUL-terminated; `out` writable.
 */
enum AgStatus ag_lint_page_object(const char *text, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCEPTGEN_H */

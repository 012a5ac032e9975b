#ifndef SLELAB_H
#define SLELAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlelabStatus {
  SLELAB_STATUS_OK = 0,
  SLELAB_STATUS_NULL_POINTER = 1,
  SLELAB_STATUS_INVALID_UTF8 = 2,
  SLELAB_STATUS_INVALID_PARAMETER = 3,
  SLELAB_STATUS_OUT_OF_DOMAIN = 4,
  SLELAB_STATUS_INVALID_START = 5,
  SLELAB_STATUS_STEP_INSTABILITY = 6,
  SLELAB_STATUS_PARSE = 7,
  SLELAB_STATUS_IO = 8,
  SLELAB_STATUS_NO_FIT = 9,
  SLELAB_STATUS_PANIC = 10,
} SlelabStatus;

/*
 Experiment configuration.
 */
typedef struct SlelabConfig SlelabConfig;

/*
 Finished experiment report.
 */
typedef struct SlelabReport SlelabReport;

/*
 Sampled chordal SLE trace in capacity time.
 */
typedef struct SlelabTrace SlelabTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next failing call on the same thread.
 */
const char *slelab_last_error(void);

/*
 Library version as a static string.
 */
const char *slelab_version(void);

/*
 Default configuration for the named experiment.

 # Safety
 `experiment` must be a nul-terminated string and `out` a valid pointer.
 */
enum SlelabStatus slelab_config_new(const char *experiment, struct SlelabConfig **out);

/*
 Parses a TOML run configuration.

 # Safety
 `toml` must be a nul-terminated string and `out` a valid pointer.
 */
enum SlelabStatus slelab_config_from_toml(const char *toml, struct SlelabConfig **out);

/*
 # Safety
 `cfg` must come from this library.
 */
enum SlelabStatus slelab_config_set_seed(struct SlelabConfig *cfg, uint64_t seed);

/*
 # Safety
 `cfg` must come from this library.
 */
enum SlelabStatus slelab_config_set_workers(struct SlelabConfig *cfg, size_t workers);

/*
 Serializes the configuration back to TOML.

 # Safety
 `cfg` must come from this library and `out` be a valid pointer.
 */
enum SlelabStatus slelab_config_to_toml(const struct SlelabConfig *cfg, char **out);

/*
 # Safety
 `cfg` must come from this library or be null; it is invalid afterwards.
 */
void slelab_config_free(struct SlelabConfig *cfg);

/*
 Runs the configured experiment to completion.

 # Safety
 `cfg` must come from this library and `out` be a valid pointer.
 */
enum SlelabStatus slelab_run(const struct SlelabConfig *cfg, struct SlelabReport **out);

/*
 # Safety
 `report` must come from this library and `out` be a valid pointer.
 */
enum SlelabStatus slelab_report_to_json(const struct SlelabReport *report, char **out);

/*
 Per-scale table with header `scale,estimate,stderr,n`.

 # Safety
 `report` must come from this library and `out` be a valid pointer.
 */
enum SlelabStatus slelab_report_to_csv(const struct SlelabReport *report, char **out);

/*
 Fitted exponent and its confidence interval. Returns `NoFit` when the
 experiment refused to fit.

 # Safety
 `report` must come from this library; the outputs must be valid pointers.
 */
enum SlelabStatus slelab_report_exponent(const struct SlelabReport *report,
                                         double *exponent,
                                         double *ci_lo,
                                         double *ci_hi);

/*
 # Safety
 `report` must come from this library or be null; it is invalid afterwards.
 */
void slelab_report_free(struct SlelabReport *report);

/*
 Chordal SLE_κ trace in H from 0 up to capacity time `horizon`.

 # Safety
 `out` must be a valid pointer.
 */
enum SlelabStatus slelab_sle_trace(double kappa,
                                   double dt,
                                   double horizon,
                                   uint64_t seed,
                                   struct SlelabTrace **out);

/*
 Number of points in the trace, 0 for null.

 # Safety
 `trace` must come from this library or be null.
 */
size_t slelab_trace_len(const struct SlelabTrace *trace);

/*
 Copies up to `cap` points into `t`, `re` and `im`; `written` receives the
 number copied.

 # Safety
 `trace` must come from this library; each array must hold `cap` doubles.
 */
enum SlelabStatus slelab_trace_copy(const struct SlelabTrace *trace,
                                    double *t,
                                    double *re,
                                    double *im,
                                    size_t cap,
                                    size_t *written);

/*
 # Safety
 `trace` must come from this library or be null; it is invalid afterwards.
 */
void slelab_trace_free(struct SlelabTrace *trace);

/*
 # Safety
 `s` must be a string returned by this library or null.
 */
void slelab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLELAB_H */

#ifndef TROPSKEL_H
#define TROPSKEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `Ok` is zero.
 */
typedef enum TropskelStatus {
  TROPSKEL_STATUS_OK = 0,
  TROPSKEL_STATUS_NULL_ARGUMENT = 1,
  TROPSKEL_STATUS_INVALID_UTF8 = 2,
  TROPSKEL_STATUS_INVALID_CONFIG = 3,
  TROPSKEL_STATUS_INVALID_INPUT = 4,
  TROPSKEL_STATUS_STAGE_FAILED = 5,
  TROPSKEL_STATUS_OUT_OF_RANGE = 6,
  TROPSKEL_STATUS_IO = 7,
  TROPSKEL_STATUS_PANIC = 8,
} TropskelStatus;

/**
 * A validated run configuration.
 */
typedef struct TropskelConfig TropskelConfig;

/**
 * The report of one pipeline run.
 */
typedef struct TropskelReport TropskelReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *tropskel_last_error(void);

/**
 * Parses and validates a TOML configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum TropskelStatus tropskel_config_from_toml(const char *toml, struct TropskelConfig **out);

/**
 * Overrides the tropical parameter β.
 *
 * # Safety
 * `cfg` must come from [`tropskel_config_from_toml`].
 */
enum TropskelStatus tropskel_config_set_beta(struct TropskelConfig *cfg, double beta);

/**
 * # Safety
 * `cfg` must come from [`tropskel_config_from_toml`] or be null.
 */
void tropskel_config_free(struct TropskelConfig *cfg);

/**
 * Runs a subcommand (`"triangulate"`, `"amoeba"`, `"potential-check"`,
 * `"critical"`, `"skeleton"` or `"verify"`). A run whose checks fail still
 * returns `Ok` with a report; inspect it with [`tropskel_report_pass`].
 *
 * # Safety
 * `cfg` must be a live config, `subcommand` a NUL-terminated string and
 * `out` a writable pointer.
 */
enum TropskelStatus tropskel_run(const struct TropskelConfig *cfg,
                                 const char *subcommand,
                                 struct TropskelReport **out);

/**
 * 1 when every check passed, 0 otherwise, -1 for a null handle.
 *
 * # Safety
 * `report` must be a live report or null.
 */
int tropskel_report_pass(const struct TropskelReport *report);

/**
 * Number of check rows, or 0 for a null handle.
 *
 * # Safety
 * `report` must be a live report or null.
 */
size_t tropskel_report_check_count(const struct TropskelReport *report);

/**
 * Reads check row `index`. `name` receives a string owned by the report.
 *
 * # Safety
 * `report` must be a live report; the out pointers must be writable.
 */
enum TropskelStatus tropskel_report_check(struct TropskelReport *report,
                                          size_t index,
                                          const char **name,
                                          int *pass,
                                          double *measured);

/**
 * The full report as JSON, owned by the report.
 *
 * # Safety
 * `report` must be a live report or null.
 */
const char *tropskel_report_json(struct TropskelReport *report);

/**
 * # Safety
 * `report` must come from [`tropskel_run`] or be null.
 */
void tropskel_report_free(struct TropskelReport *report);

/**
 * The cutoff profile χ.
 */
double tropskel_chi(double x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROPSKEL_H */

/* C ABI for the agilesim constellation simulator. */

#ifndef AGILESIM_H
#define AGILESIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum AgilesimStatus {
  AgilesimStatus_Ok = 0,
  AgilesimStatus_NullArgument = 1,
  AgilesimStatus_InvalidUtf8 = 2,
  AgilesimStatus_ConfigError = 3,
  AgilesimStatus_RunError = 4,
} AgilesimStatus;

/**
 * Scheduling mode to execute.
 */
typedef enum AgilesimMode {
  AgilesimMode_Decentralized = 0,
  AgilesimMode_Centralized = 1,
  AgilesimMode_Nonagile = 2,
} AgilesimMode;

/**
 * Opaque scenario handle.
 */
typedef struct AgilesimScenario AgilesimScenario;

/**
 * Flat run summary filled by [`agilesim_run`].
 */
typedef struct AgilesimMetrics {
  uint64_t seed;
  double cumulative_recorded_value;
  double pct_gp_observed;
  double divergence_pct;
  uint64_t observations;
  uint64_t scheduler_calls;
  uint64_t bundles_created;
  uint64_t bundles_delivered;
  uint64_t bundles_dropped_ttl;
  uint64_t bundles_unroutable;
} AgilesimMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *agilesim_version(void);

/**
 * Most recent error message for this thread, or NULL when none.
 * Free with [`agilesim_string_free`].
 */
char *agilesim_last_error_message(void);

/**
 * Release a string allocated by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer previously returned by an agilesim function
 * that allocates a string, not yet freed.
 */
void agilesim_string_free(char *s);

/**
 * Scenario with the built-in defaults (24-satellite flood monitoring).
 */
struct AgilesimScenario *agilesim_scenario_default(void);

/**
 * Scenario parsed from TOML text.
 *
 * # Safety
 * `toml_text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum AgilesimStatus agilesim_scenario_from_toml(const char *toml_text,
                                                struct AgilesimScenario **out);

/**
 * Scenario loaded from a TOML file; relative nature-run paths resolve
 * against the file's directory.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to receive the handle.
 */
enum AgilesimStatus agilesim_scenario_from_file(const char *path, struct AgilesimScenario **out);

/**
 * Override the master seed.
 *
 * # Safety
 * `scenario` must be a live handle from an agilesim constructor.
 */
enum AgilesimStatus agilesim_scenario_set_seed(struct AgilesimScenario *scenario, uint64_t seed);

/**
 * Fully resolved configuration as TOML. Free with [`agilesim_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle from an agilesim constructor.
 */
char *agilesim_scenario_echo_toml(const struct AgilesimScenario *scenario);

/**
 * Release a scenario handle.
 *
 * # Safety
 * `scenario` must be NULL or a live handle from an agilesim constructor,
 * not yet freed.
 */
void agilesim_scenario_free(struct AgilesimScenario *scenario);

/**
 * Run one mode and fill `out_metrics`.
 *
 * # Safety
 * `scenario` must be a live handle; `out_metrics` must point to writable
 * memory for one `AgilesimMetrics`.
 */
enum AgilesimStatus agilesim_run(const struct AgilesimScenario *scenario,
                                 enum AgilesimMode mode,
                                 struct AgilesimMetrics *out_metrics);

/**
 * Run one mode and return the full metrics document as text.
 * Free with [`agilesim_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle; `out_text` must be a valid pointer to
 * receive the string.
 */
enum AgilesimStatus agilesim_run_to_text(const struct AgilesimScenario *scenario,
                                         enum AgilesimMode mode,
                                         char **out_text);

/**
 * Maneuver time of the default slew model, seconds; NaN for invalid input.
 */
double agilesim_slew_time_s(double alpha_deg, double k_sigma);

/**
 * TTL for a bundle priority level, seconds; negative for invalid priority.
 */
double agilesim_ttl_for_priority_s(uint8_t priority);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGILESIM_H */

#ifndef MAGLEV_H
#define MAGLEV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MaglevStatus {
  MAGLEV_STATUS_OK = 0,
  MAGLEV_STATUS_NULL_POINTER = 1,
  MAGLEV_STATUS_INVALID_ARGUMENT = 2,
  MAGLEV_STATUS_INVALID_CONFIG = 3,
  /**
   * The ball reached the magnet; the partial log is still returned.
   */
  MAGLEV_STATUS_CRASH = 4,
  /**
   * A state or estimate became non-finite; the partial log is still returned.
   */
  MAGLEV_STATUS_OVERFLOW = 5,
  MAGLEV_STATUS_IO = 6,
  MAGLEV_STATUS_OUT_OF_RANGE = 7,
  MAGLEV_STATUS_PANIC = 8,
} MaglevStatus;

typedef enum MaglevController {
  MAGLEV_CONTROLLER_IDA_SENSORLESS = 0,
  MAGLEV_CONTROLLER_IDA_STATE = 1,
  MAGLEV_CONTROLLER_BACKSTEPPING = 2,
} MaglevController;

typedef enum MaglevObserver {
  MAGLEV_OBSERVER_KKL = 0,
  MAGLEV_OBSERVER_LUENBERGER = 1,
} MaglevObserver;

/**
 * Opaque trajectory handle.
 */
typedef struct MaglevLog MaglevLog;

/**
 * Opaque scenario handle.
 */
typedef struct MaglevScenario MaglevScenario;

/**
 * Steady-state errors averaged over the plateaus after the first.
 */
typedef struct MaglevMetrics {
  size_t plateaus;
  double position_estimate_error;
  double position_estimate_bias;
  double position_jitter_rms;
  double flux_error;
  double momentum_error;
  double momentum_error_luenberger;
  double resistance_error;
  double tracking_error;
  /**
   * Number of warnings the metric pass produced.
   */
  size_t warnings;
} MaglevMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *maglev_last_error(void);

/**
 * Built-in scenario: state-feedback observer study, or the same scenario
 * closed through the observer when `sensorless` is true.
 */
struct MaglevScenario *maglev_scenario_default(bool sensorless);

/**
 * Parse and validate a TOML scenario into `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MaglevStatus maglev_scenario_from_toml(const char *text, struct MaglevScenario **out);

/**
 * Serialise the scenario as TOML into `*out`; release it with
 * [`maglev_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle and `out` a writable pointer.
 */
enum MaglevStatus maglev_scenario_to_toml(const struct MaglevScenario *scenario, char **out);

/**
 * # Safety
 * `text` must be null or a string returned by this library, not yet freed.
 */
void maglev_string_free(char *text);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_seed(struct MaglevScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_epsilon(struct MaglevScenario *scenario, double epsilon);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_duration(struct MaglevScenario *scenario, double duration);

/**
 * Integration steps per probe period. The log keeps its rate, so `steps`
 * must stay a multiple of it.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_steps_per_period(struct MaglevScenario *scenario,
                                                       uint32_t steps);

/**
 * Half-range of the uniform current noise (A).
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_noise_amplitude(struct MaglevScenario *scenario,
                                                      double amplitude);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_controller(struct MaglevScenario *scenario,
                                                 enum MaglevController controller);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum MaglevStatus maglev_scenario_set_observer(struct MaglevScenario *scenario,
                                               enum MaglevObserver observer);

/**
 * # Safety
 * `scenario` must be null or a live handle; it is invalid afterwards.
 */
void maglev_scenario_free(struct MaglevScenario *scenario);

/**
 * Run the scenario. On success and on a crash or overflow `*out` receives
 * the (possibly partial) log, which the caller frees with
 * [`maglev_log_free`]; otherwise `*out` is null.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a writable pointer.
 */
enum MaglevStatus maglev_simulate(const struct MaglevScenario *scenario, struct MaglevLog **out);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `log` must be null or a live handle.
 */
size_t maglev_log_len(const struct MaglevLog *log);

size_t maglev_log_field_count(void);

/**
 * Static name of column `index`, or null when out of range.
 */
const char *maglev_log_field_name(size_t index);

/**
 * Column index of `name` into `*index`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `index` a writable pointer.
 */
enum MaglevStatus maglev_log_field_index(const char *name, size_t *index);

/**
 * Value of column `field` at record `row`.
 *
 * # Safety
 * `log` must be a live handle and `value` a writable pointer.
 */
enum MaglevStatus maglev_log_value(const struct MaglevLog *log,
                                   size_t row,
                                   size_t field,
                                   double *value);

/**
 * Copy column `field` into `buffer`, which must hold at least
 * [`maglev_log_len`] values.
 *
 * # Safety
 * `log` must be a live handle and `buffer` must point to `capacity`
 * writable doubles.
 */
enum MaglevStatus maglev_log_column(const struct MaglevLog *log,
                                    size_t field,
                                    double *buffer,
                                    size_t capacity);

/**
 * Write the log as CSV to `path`.
 *
 * # Safety
 * `log` must be a live handle and `path` a NUL-terminated string.
 */
enum MaglevStatus maglev_log_write_csv(const struct MaglevLog *log, const char *path);

/**
 * Steady-state metrics of `log`, which must come from `scenario`.
 *
 * # Safety
 * `log` and `scenario` must be live handles and `out` a writable pointer.
 */
enum MaglevStatus maglev_log_metrics(const struct MaglevLog *log,
                                     const struct MaglevScenario *scenario,
                                     struct MaglevMetrics *out);

/**
 * # Safety
 * `log` must be null or a live handle; it is invalid afterwards.
 */
void maglev_log_free(struct MaglevLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGLEV_H */

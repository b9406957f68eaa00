#include <stdio.h>
#include <string.h>

#include "maglev.h"

int main(int argc, char **argv) {
  if (argc < 2) {
    return 2;
  }
  MaglevScenario *scenario = maglev_scenario_default(false);
  if (maglev_scenario_set_duration(scenario, 0.05) != MAGLEV_STATUS_OK) {
    return 3;
  }
  if (maglev_scenario_set_epsilon(scenario, -1.0) != MAGLEV_STATUS_INVALID_ARGUMENT ||
      maglev_last_error() == NULL) {
    return 4;
  }
  MaglevLog *log = NULL;
  if (maglev_simulate(scenario, &log) != MAGLEV_STATUS_OK || log == NULL) {
    return 5;
  }
  size_t t_index = 0;
  if (maglev_log_field_index("t", &t_index) != MAGLEV_STATUS_OK || t_index != 0) {
    return 6;
  }
  double last = 0.0;
  if (maglev_log_value(log, maglev_log_len(log) - 1, t_index, &last) != MAGLEV_STATUS_OK) {
    return 7;
  }
  MaglevMetrics metrics;
  memset(&metrics, 0, sizeof metrics);
  if (maglev_log_metrics(log, scenario, &metrics) != MAGLEV_STATUS_OK) {
    return 8;
  }
  if (maglev_log_write_csv(log, argv[1]) != MAGLEV_STATUS_OK) {
    return 9;
  }
  printf("%zu %.6f %s\n", maglev_log_len(log), last, maglev_log_field_name(1));
  maglev_log_free(log);
  maglev_scenario_free(scenario);
  return 0;
}

#ifndef PINCHFLOW_H
#define PINCHFLOW_H

/* C interface to the pinchflow library. Handles are opaque; every call
 * returns a pf_status and leaves a message for pf_last_error() on failure.
 * Strings returned through char** are owned by the caller and released with
 * pf_free_string(). */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PF_API __declspec(dllexport)
#else
#define PF_API __attribute__((visibility("default")))
#endif

typedef enum pf_status {
  PF_OK = 0,
  PF_INVALID_ARGUMENT = 1,
  PF_INADMISSIBLE = 2,
  PF_RANGE = 3,
  PF_CONFIG = 4,
  PF_IO = 5,
  PF_NUMERICAL = 6,
  PF_ASSERTION = 7,
  PF_NOT_APPLICABLE = 8,
  PF_INTERNAL = 9
} pf_status;

typedef struct pf_scenario pf_scenario;
typedef struct pf_result pf_result;

PF_API const char* pf_version(void);
PF_API const char* pf_status_name(pf_status status);

/* Message of the last failed call on this thread; "" if none. */
PF_API const char* pf_last_error(void);
PF_API void pf_free_string(char* s);

/* Scenarios. flags_json may be NULL; otherwise it is a JSON object whose
 * values fill keys missing from the config, and a value disagreeing with
 * the config is PF_CONFIG. */
PF_API pf_status pf_scenario_from_file(const char* path, const char* flags_json, pf_scenario** out);
PF_API pf_status pf_scenario_from_json(const char* json, const char* flags_json, pf_scenario** out);
PF_API pf_status pf_scenario_output_dir(const pf_scenario* scenario, char** out);
PF_API pf_status pf_scenario_name(const pf_scenario* scenario, char** out);
PF_API void pf_scenario_free(pf_scenario* scenario);

/* jobs is the worker count for searches inside one scenario (>= 1). */
PF_API pf_status pf_scenario_run(const pf_scenario* scenario, int jobs, pf_result** out);

PF_API pf_status pf_result_passed(const pf_result* result, int* passed);
PF_API pf_status pf_result_first_failure(const pf_result* result, char** out);
PF_API pf_status pf_result_summary(const pf_result* result, char** out);
PF_API pf_status pf_result_report_json(const pf_result* result, char** out);
/* PF_NOT_APPLICABLE when the scenario produced no trace. */
PF_API pf_status pf_result_trace_csv(const pf_result* result, char** out);
/* Writes trace.csv, rescaled.csv, report.json and summary.txt; dir NULL
 * selects the scenario's output_dir. */
PF_API pf_status pf_result_write(const pf_result* result, const char* dir);
PF_API void pf_result_free(pf_result* result);

/* Direct evaluations. */
PF_API pf_status pf_admissible(int n, int m, double alpha, int* admissible);
PF_API pf_status pf_sphere_extinction_time(int n, double K, double rho0, double* T);
PF_API pf_status pf_pinching_report_json(const double* lambda, int n, int m, double alpha,
                                         double K, double eta, char** out);
PF_API pf_status pf_poincare_ratio(const double* lambda, int n, int m, double alpha, double eta,
                                   double K, double* ratio);
/* Certificate JSON of the multistart search. */
PF_API pf_status pf_min_ratio_json(int n, int m, double alpha, double eta, int budget,
                                   uint64_t seed, int jobs, char** out);

/* CSV header shared by every trace export. */
PF_API const char* pf_trace_csv_header(void);

#ifdef __cplusplus
}
#endif

#endif

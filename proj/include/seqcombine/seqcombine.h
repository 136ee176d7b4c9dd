#ifndef SEQCOMBINE_SEQCOMBINE_H
#define SEQCOMBINE_SEQCOMBINE_H

/* C interface to the seqcombine library. Every call returns a status; on
 * failure seqc_last_error() holds a message for the calling thread. Strings
 * returned through char** outputs are owned by the caller and released with
 * seqc_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(SEQCOMBINE_BUILDING_LIBRARY)
#define SEQC_API __declspec(dllexport)
#else
#define SEQC_API __declspec(dllimport)
#endif
#else
#define SEQC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum seqc_status {
  SEQC_OK = 0,
  SEQC_NOT_POSITIVE_DEFINITE = 1,
  SEQC_DIMENSION_MISMATCH = 2,
  SEQC_DEGENERATE_DIRECTION = 3,
  SEQC_TRIVIAL_COMBINATION = 4,
  SEQC_NON_MONOTONE_INFORMATION = 5,
  SEQC_INVALID_SPEC = 6,
  SEQC_RESTRICTION_EXCEEDS_FOLLOWUP = 7,
  SEQC_ARM_MISSING = 8,
  SEQC_DEGENERATE_ARM = 9,
  SEQC_LOOK_ORDER = 10,
  SEQC_INSUFFICIENT_DATA = 11,
  SEQC_CONFIG_INVALID = 12,
  SEQC_SCHEMA_ERROR = 13,
  SEQC_STATE_MISMATCH = 14,
  SEQC_IO_ERROR = 15,
  SEQC_NULL_ARGUMENT = 16,
  SEQC_INTERNAL = 17
} seqc_status;

SEQC_API const char* seqc_version(void);
SEQC_API const char* seqc_status_name(seqc_status status);
/* Process exit code for a status: 0 success, 2 config, 3 data, 4 numeric. */
SEQC_API int seqc_exit_code(seqc_status status);
/* Message of the last failed call on this thread; empty after a success. */
SEQC_API const char* seqc_last_error(void);
SEQC_API void seqc_string_free(char* s);

/* ---- run configuration ---- */

typedef struct seqc_config seqc_config;

SEQC_API seqc_status seqc_config_load(const char* path, seqc_config** out);
SEQC_API seqc_status seqc_config_parse(const char* json_text, seqc_config** out);
SEQC_API void seqc_config_free(seqc_config* config);
SEQC_API seqc_status seqc_config_set_seed(seqc_config* config, uint64_t seed);
SEQC_API seqc_status seqc_config_set_threads(seqc_config* config, size_t threads);
SEQC_API seqc_status seqc_config_set_out_dir(seqc_config* config, const char* dir);
/* Restrict the run to the named scenario or test. Repeated calls add names;
 * the selection takes effect in seqc_simulate. */
SEQC_API seqc_status seqc_config_select_scenario(seqc_config* config, const char* name);
SEQC_API seqc_status seqc_config_select_test(seqc_config* config, const char* name);
SEQC_API seqc_status seqc_config_seed(const seqc_config* config, uint64_t* seed);
SEQC_API seqc_status seqc_config_threads(const seqc_config* config, size_t* threads);
SEQC_API seqc_status seqc_config_out_dir(const seqc_config* config, char** dir);
SEQC_API seqc_status seqc_config_to_json(const seqc_config* config, char** json_text);

/* ---- simulation ---- */

typedef struct seqc_report seqc_report;

SEQC_API seqc_status seqc_simulate(const seqc_config* config, seqc_report** out);
SEQC_API void seqc_report_free(seqc_report* report);
/* Number of scenario x test rows. */
SEQC_API seqc_status seqc_report_rows(const seqc_report* report, size_t* rows);
SEQC_API seqc_status seqc_report_json(const seqc_report* report, char** json_text);
SEQC_API seqc_status seqc_report_csv(const seqc_report* report, char** csv_text);
/* Writes report.json and report.csv into dir (created if needed), plus
 * standardized_cov.csv for complete-path runs. */
SEQC_API seqc_status seqc_report_write(const seqc_report* report, const char* dir);

/* ---- boundaries ---- */

/* cov is row-major looks x looks; cumulative holds planned cumulative
 * fractions of alpha ending at 1. critical receives looks values. */
SEQC_API seqc_status seqc_indinc_boundaries(const double* variances, size_t looks, const double* cumulative,
                                            double alpha, double* critical);
SEQC_API seqc_status seqc_mvn_boundaries(const double* corr, size_t looks, const double* cumulative, double alpha,
                                         uint64_t seed, double* critical);
/* P(lower < Z < upper) for Z ~ N(0, corr); +-HUGE_VAL allowed as bounds. */
SEQC_API seqc_status seqc_mvn_rectangle(const double* lower, const double* upper, const double* corr, size_t dim,
                                        uint64_t seed, double* probability, double* error);
/* Boundary command on files: covariance CSV and plan JSON. seed may be NULL
 * to use the plan's seed. */
SEQC_API seqc_status seqc_boundaries_files(const char* cov_csv_path, const char* plan_json_path,
                                           const uint64_t* seed, char** json_text);

/* ---- combination ---- */

/* y = b' V^- x with the full looks x looks block, its variance and z. */
SEQC_API seqc_status seqc_combine(const double* x, const double* cov, const double* direction, size_t looks,
                                  double* y, double* variance, double* z);

/* ---- sequential analysis of a dataset ---- */

/* Runs looks 1..look of test_name under the config's design and seed. When
 * state_path is given, an existing state file is checked against the data
 * and the updated state is written back. json_text receives the state. */
SEQC_API seqc_status seqc_analyze(const char* dataset_path, const seqc_config* config, const char* test_name,
                                  size_t look, const char* state_path, char** json_text);

#ifdef __cplusplus
}
#endif

#endif

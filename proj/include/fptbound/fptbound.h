#ifndef FPTBOUND_H
#define FPTBOUND_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FPTBOUND_BUILDING_LIBRARY)
#define FPT_API __attribute__((visibility("default")))
#else
#define FPT_API
#endif

/* Return codes of every fallible call. fpt_last_error() describes the last failure on the calling thread. */
typedef enum fpt_status {
  FPT_OK = 0,
  FPT_ERR_ARGUMENT = 1,
  FPT_ERR_IO = 2,
  FPT_ERR_PARSE = 3,
  FPT_ERR_INVALID = 4,
  FPT_ERR_INTERNAL = 5
} fpt_status;

typedef enum fpt_format { FPT_FORMAT_TEXT = 0, FPT_FORMAT_JSON = 1, FPT_FORMAT_CSV = 2 } fpt_format;

typedef enum fpt_objective { FPT_OBJECTIVE_MFPT = 0, FPT_OBJECTIVE_HITPROB = 1 } fpt_objective;

typedef enum fpt_sense { FPT_MINIMIZE = 0, FPT_MAXIMIZE = 1 } fpt_sense;

typedef enum fpt_solve_status {
  FPT_SOLVE_OPTIMAL = 0,
  FPT_SOLVE_INFEASIBLE = 1,
  FPT_SOLVE_UNBOUNDED = 2,
  FPT_SOLVE_NUMERICAL_FAILURE = 3,
  FPT_SOLVE_ITERATION_LIMIT = 4
} fpt_solve_status;

/* A parsed model together with its current query. */
typedef struct fpt_model fpt_model;

typedef struct fpt_options {
  double gap_tol;
  double feas_tol;
  int max_iter;
  int scale;              /* nonzero: apply moment scaling */
  int reduce;             /* nonzero: drop species that cannot reach the thresholds */
  int reduced_localizers; /* nonzero: localizing matrices at order r - 1 */
  int fallback;           /* nonzero: retry failed sides, report last solved order */
  uint64_t seed;          /* SSA pilot seed */
} fpt_options;

typedef struct fpt_bound_result {
  double lower;
  double upper;
  int order;
  fpt_solve_status lower_status;
  fpt_solve_status upper_status;
  int lower_fallback_order; /* 0 when none */
  double lower_fallback_value;
  int upper_fallback_order;
  double upper_fallback_value;
  double wall_seconds;
} fpt_bound_result;

FPT_API const char* fpt_version(void);
FPT_API const char* fpt_last_error(void);
/* Releases strings returned through char** out parameters. */
FPT_API void fpt_string_free(char* s);

FPT_API void fpt_options_init(fpt_options* options);

FPT_API fpt_status fpt_model_parse(const char* text, fpt_model** out);
FPT_API fpt_status fpt_model_load(const char* path, fpt_model** out);
FPT_API void fpt_model_free(fpt_model* model);

/* Query editing. A model file without a query block starts with an empty one. */
FPT_API fpt_status fpt_model_set_query(fpt_model* model, const char* query_block);
FPT_API fpt_status fpt_model_set_thresholds(fpt_model* model, const char* thresholds); /* "D>=5, M>=3" */
FPT_API fpt_status fpt_model_set_horizon(fpt_model* model, double horizon);      /* INFINITY allowed */
FPT_API fpt_status fpt_model_set_order(fpt_model* model, int order);
FPT_API fpt_status fpt_model_set_objective(fpt_model* model, fpt_objective objective);
FPT_API fpt_status fpt_model_set_scale_bound(fpt_model* model, const char* species, double bound);
FPT_API fpt_status fpt_model_set_time_scale(fpt_model* model, double time_scale);
FPT_API fpt_status fpt_model_get_order(const fpt_model* model, int* order);
/* Serialized model and query in the model file syntax. */
FPT_API fpt_status fpt_model_serialize(const fpt_model* model, char** out);

/* Diagnostics of the model and query; *has_errors is set to 1 when any is an error. */
FPT_API fpt_status fpt_check(const fpt_model* model, const fpt_options* options, fpt_format format, char** report,
                             int* has_errors);

/* Moment equations up to max_degree and the generated constraint set. */
FPT_API fpt_status fpt_moments(const fpt_model* model, int max_degree, fpt_format format, char** report);

/* Lower and upper bound on the query objective. result and report may be NULL. */
FPT_API fpt_status fpt_bound(const fpt_model* model, const fpt_options* options, fpt_bound_result* result,
                             fpt_format format, char** report);

/* Bounds for orders 1..r_max. *all_optimal is 1 when every side solved. */
FPT_API fpt_status fpt_table(const fpt_model* model, const fpt_options* options, int r_max, fpt_format format,
                             char** report, int* all_optimal);

/* Hit probability bounds over a horizon grid. *all_ok is 1 when every side solved and curves are monotone. */
FPT_API fpt_status fpt_cdf(const fpt_model* model, const fpt_options* options, const double* grid, size_t n,
                           fpt_format format, char** report, int* all_ok);

/* SSA estimate of the first passage time and hit probability. */
FPT_API fpt_status fpt_simulate(const fpt_model* model, size_t n, uint64_t seed, double confidence,
                                fpt_format format, char** report);
/* Per-trajectory CSV dump (tau, hit face). */
FPT_API fpt_status fpt_simulate_samples(const fpt_model* model, size_t n, uint64_t seed, char** csv);

/* SDPA sparse export of one side of the relaxation. */
FPT_API fpt_status fpt_export_sdpa(const fpt_model* model, const fpt_options* options, fpt_sense sense,
                                   char** sdpa);

/* Solves an SDPA sparse problem with the embedded solver. */
FPT_API fpt_status fpt_solve_sdpa(const char* sdpa_text, const fpt_options* options, fpt_format format,
                                  char** report, fpt_solve_status* status);

#ifdef __cplusplus
}
#endif

#endif

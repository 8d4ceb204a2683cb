/* C interface to the average-reward options toolkit.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Functions return an avgopt_status; on failure avgopt_last_error() holds a
 * message for the calling thread until its next failing call. Strings
 * returned through char** must be released with avgopt_string_free. */
#ifndef AVGOPT_AVGOPT_H
#define AVGOPT_AVGOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(AVGOPT_BUILDING_LIBRARY)
#define AVGOPT_API __attribute__((visibility("default")))
#else
#define AVGOPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avgopt_status {
  AVGOPT_OK = 0,
  AVGOPT_ERR_USAGE = 1,   /* bad argument, unknown field or command */
  AVGOPT_ERR_RUNTIME = 2  /* solver failure, I/O error, internal error */
} avgopt_status;

typedef struct avgopt_config avgopt_config;
typedef struct avgopt_report avgopt_report;
typedef struct avgopt_env avgopt_env;

AVGOPT_API const char* avgopt_version(void);
AVGOPT_API const char* avgopt_last_error(void);
AVGOPT_API void avgopt_string_free(char* s);

/* ---- configuration ---- */
AVGOPT_API avgopt_status avgopt_config_default(avgopt_config** out);
AVGOPT_API avgopt_status avgopt_config_load(const char* path, avgopt_config** out);
AVGOPT_API avgopt_status avgopt_config_parse(const char* json_text, avgopt_config** out);
/* Applies "section.field=value". */
AVGOPT_API avgopt_status avgopt_config_set(avgopt_config* cfg, const char* assignment);
AVGOPT_API avgopt_status avgopt_config_to_json(const avgopt_config* cfg, char** out);
AVGOPT_API void avgopt_config_free(avgopt_config* cfg);

/* ---- commands ----
 * command: solve, learn, plan, sweep, interrupt or model. Output files go
 * under out_dir; progress lines go to standard error when verbose != 0. */
AVGOPT_API avgopt_status avgopt_run(const char* command, const avgopt_config* cfg, const char* out_dir,
                                    int verbose, avgopt_report** out);
AVGOPT_API const char* avgopt_report_summary(const avgopt_report* report);
AVGOPT_API size_t avgopt_report_artifact_count(const avgopt_report* report);
AVGOPT_API const char* avgopt_report_artifact(const avgopt_report* report, size_t i);
AVGOPT_API void avgopt_report_free(avgopt_report* report);

/* ---- environment and exact solutions ---- */
AVGOPT_API avgopt_status avgopt_env_create(const avgopt_config* cfg, avgopt_env** out);
AVGOPT_API size_t avgopt_env_num_states(const avgopt_env* env);
AVGOPT_API size_t avgopt_env_num_options(const avgopt_env* env);
/* Option label i, valid for the lifetime of env. */
AVGOPT_API const char* avgopt_env_option_label(const avgopt_env* env, size_t i);
AVGOPT_API avgopt_status avgopt_env_optimal_rate(const avgopt_env* env, double* rate);
/* Shortest-path length from the start cell to the active goal. */
AVGOPT_API avgopt_status avgopt_env_goal_distance(const avgopt_env* env, int* steps);
AVGOPT_API void avgopt_env_free(avgopt_env* env);

#ifdef __cplusplus
}
#endif

#endif /* AVGOPT_AVGOPT_H */

/* C interface to the karma library. All functions report failures through a
 * status code; karma_last_error() returns the message of the last failure on
 * the calling thread. Handles are owned by the caller and released with the
 * matching *_free function. */
#ifndef KARMA_H
#define KARMA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KARMA_API __declspec(dllexport)
#else
#define KARMA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum karma_status {
    KARMA_OK = 0,
    KARMA_ERR_INVALID_ARGUMENT = 1,
    KARMA_ERR_ENCODING = 2,
    KARMA_ERR_CONFIG = 3,
    KARMA_ERR_IO = 4,
    KARMA_ERR_RUNTIME = 5
} karma_status;

typedef struct karma_config karma_config;
typedef struct karma_env karma_env;
typedef struct karma_twin karma_twin;

KARMA_API const char* karma_version(void);
KARMA_API const char* karma_last_error(void);
KARMA_API const char* karma_status_name(karma_status s);

/* --- configuration ------------------------------------------------------ */

KARMA_API karma_status karma_config_load(const char* path, karma_config** out);
KARMA_API karma_status karma_config_parse(const char* text, karma_config** out);
/* key is "section.key", e.g. "train.actor_lr". */
KARMA_API karma_status karma_config_set(karma_config* cfg, const char* key, const char* value);
/* Copies the canonical snapshot into buf (NUL-terminated, truncated to cap)
 * and stores the full length excluding the terminator in *needed. */
KARMA_API karma_status karma_config_snapshot(const karma_config* cfg, char* buf, size_t cap, size_t* needed);
KARMA_API void karma_config_free(karma_config* cfg);

/* --- pipeline phases ---------------------------------------------------- */

typedef struct karma_run_options {
    uint64_t seed;
    const char* out;          /* run directory, required */
    int episodes;             /* < 0: take it from the config */
    const char* scenario;     /* NULL: config default */
    const char* org;          /* none | soft | hard */
    const char* agents;       /* single | multi */
    const char* backend;      /* twin | ground_truth */
    int no_mlp;
    const char* traces;       /* fit-twin input */
    const char* twin;         /* twin directory for the twin backend */
    const char* policies;     /* roster directory; NULL evaluates KHPA */
    const char* trajectories; /* analyze input */
} karma_run_options;

KARMA_API void karma_run_options_init(karma_run_options* opts);

KARMA_API karma_status karma_collect(const karma_config* cfg, const karma_run_options* opts);
KARMA_API karma_status karma_fit_twin(const karma_config* cfg, const karma_run_options* opts);
KARMA_API karma_status karma_train(const karma_config* cfg, const karma_run_options* opts);
KARMA_API karma_status karma_evaluate(const karma_config* cfg, const karma_run_options* opts);
KARMA_API karma_status karma_analyze(const karma_config* cfg, const karma_run_options* opts);
KARMA_API karma_status karma_compare(const char* const* runs, size_t n_runs, const karma_run_options* opts);

/* Re-hashes every artifact listed in dir/manifest.txt. */
KARMA_API karma_status karma_verify_run(const char* dir);

/* --- ground-truth environment ------------------------------------------- */

/* Scenario from the config with the scripted attacker; scenario may be NULL. */
KARMA_API karma_status karma_env_create(const karma_config* cfg, const char* scenario, uint64_t seed,
                                        karma_env** out);
KARMA_API karma_status karma_env_reset(karma_env* env, uint64_t seed);
KARMA_API size_t karma_env_services(const karma_env* env);
/* Raw state, 9 fields per service in order n_id, d_dep, d_des, d_err, d_rem,
 * r_cpu, r_ram, t_in, t_out. */
KARMA_API karma_status karma_env_state(const karma_env* env, double* fields, size_t cap, size_t* needed);
/* One step: defender k scales services[k] by deltas[k]. Writes the
 * operational resilience of the resulting state to *or_value. */
KARMA_API karma_status karma_env_step(karma_env* env, const int* services, const int* deltas, size_t n_agents,
                                      double* or_value);
KARMA_API void karma_env_free(karma_env* env);

/* --- digital twin ------------------------------------------------------- */

KARMA_API karma_status karma_twin_load(const char* dir, karma_twin** out);
KARMA_API size_t karma_twin_table_size(const karma_twin* twin);
KARMA_API int karma_twin_has_approximator(const karma_twin* twin);
/* Share of transitions in a trace file predicted within tol on every field. */
KARMA_API karma_status karma_twin_accuracy(const karma_twin* twin, const char* trace_path, double tol,
                                           double* accuracy);
KARMA_API void karma_twin_free(karma_twin* twin);

#ifdef __cplusplus
}
#endif

#endif /* KARMA_H */

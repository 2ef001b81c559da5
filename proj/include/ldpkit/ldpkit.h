#ifndef LDPKIT_H
#define LDPKIT_H

/* C interface to the ldpkit library. All functions return a status code
 * (LDPKIT_OK on success); the last failure message for the calling thread is
 * available via ldpkit_last_error(). Strings handed out through char** are
 * heap copies owned by the caller: release them with ldpkit_string_free. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  LDPKIT_OK = 0,
  LDPKIT_EINVAL = 1,     /* malformed config or arguments */
  LDPKIT_EVIOLATION = 2, /* certified violation of a declared assumption */
  LDPKIT_ENOCONV = 3,    /* iteration failed to converge / blow-up guard hit */
  LDPKIT_EINTERNAL = 4   /* unexpected error */
};

const char* ldpkit_version(void);

/* Message for the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next ldpkit_* call from the same thread. */
const char* ldpkit_last_error(void);

void ldpkit_string_free(char* s);

/* ---- configuration ------------------------------------------------------ */

/* Parse TOML (or JSON, autodetected) text into canonical JSON. `name` is used
 * in diagnostics ("name:line: ..."). */
int ldpkit_config_parse(const char* text, const char* name, char** json_out);
int ldpkit_config_load(const char* path, char** json_out);

/* Set `dotted.key` in a JSON config to a TOML-syntax value (bare words become
 * strings) and return the updated JSON. */
int ldpkit_config_override(const char* config_json, const char* dotted_key,
                           const char* value_text, char** json_out);

/* ---- models -------------------------------------------------------------- */

typedef struct ldpkit_model ldpkit_model;

/* Build the model described by the [model] table of a JSON config. Fails with
 * LDPKIT_EVIOLATION when the requested parameters are rejected as non-coercive. */
int ldpkit_model_create(const char* config_json, ldpkit_model** out);
void ldpkit_model_free(ldpkit_model* m);

int ldpkit_model_dim(const ldpkit_model* m);
int ldpkit_model_noise_dim(const ldpkit_model* m);
const char* ldpkit_model_name(const ldpkit_model* m);
double ldpkit_model_theta(const ldpkit_model* m);

/* Randomized coercivity probe; writes the empirical constant to *theta_hat and
 * returns LDPKIT_EVIOLATION when it undercuts the declared one. */
int ldpkit_model_check(const ldpkit_model* m, int n_samples, uint64_t seed, double* theta_hat);

/* ---- deterministic skeleton ---------------------------------------------- */

typedef struct ldpkit_trajectory ldpkit_trajectory;

/* Solve the controlled skeleton equation using [grid], [initial] and [control]
 * from the config. */
int ldpkit_skeleton_solve(const ldpkit_model* m, const char* config_json,
                          ldpkit_trajectory** out);
void ldpkit_trajectory_free(ldpkit_trajectory* u);

int ldpkit_trajectory_nodes(const ldpkit_trajectory* u);
int ldpkit_trajectory_dim(const ldpkit_trajectory* u);
/* Copy the state at a node into `out` (length = dim). */
int ldpkit_trajectory_state(const ldpkit_trajectory* u, int node, double* out);
double ldpkit_trajectory_sup_h(const ldpkit_trajectory* u);

/* ---- stochastic simulation ----------------------------------------------- */

typedef struct {
  double mean_mr;        /* ensemble mean of sup-H + L2-V */
  double max_ito_defect; /* worst per-path energy-identity defect */
  double rms_ito_defect;
  double mean_final_defect; /* signed final-node defect, averaged */
  double se_mean;           /* its standard error */
  int exploded;             /* paths that tripped the blow-up guard */
} ldpkit_sim_summary;

/* Monte Carlo with the [grid], [initial] and [simulate] tables of the config
 * (epsilon, n_paths, k_u; seed from [run]). */
int ldpkit_simulate(const ldpkit_model* m, const char* config_json, ldpkit_sim_summary* out);

/* ---- rate function -------------------------------------------------------- */

/* Minimize the rate functional for the [event] table; *value receives the
 * optimal 1/2||psi||^2 (or +inf encoded as HUGE_VAL when infeasible) and
 * *feasible the constraint verdict. */
int ldpkit_rate_minimize(const ldpkit_model* m, const char* config_json, double* value,
                         int* feasible);

/* ---- experiment driver ----------------------------------------------------- */

/* Run a full subcommand (check | skeleton | simulate | rate | ldp | convergence)
 * against a JSON config. On success *result_json holds
 *   {"report": ..., "manifest": ..., "tables": [{"name", "header", "rows"}, ...]}.
 * A certified violation returns LDPKIT_EVIOLATION with the result still set so
 * callers can inspect report.violations. */
int ldpkit_run_experiment(const char* subcommand, const char* config_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* LDPKIT_H */

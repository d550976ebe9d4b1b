/* Bayesian Diversity Search: C interface.
 *
 * Every function returns a bds_status. On failure a description is available
 * from bds_last_error() on the same thread. Strings returned through char**
 * out-parameters are owned by the caller and must be released with
 * bds_string_free(). */
#ifndef BDS_BDS_H
#define BDS_BDS_H

#include <stddef.h>
#include <stdint.h>

#if defined(BDS_BUILDING_LIBRARY)
#define BDS_API __attribute__((visibility("default")))
#else
#define BDS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bds_status {
  BDS_OK = 0,
  BDS_ERR_INVALID_ARGUMENT = 1,
  BDS_ERR_CONFIG = 2,
  BDS_ERR_SURROGATE = 3,
  BDS_ERR_OPTIMIZER = 4,
  BDS_ERR_ORACLE = 5,
  BDS_ERR_TRACE = 6,
  BDS_ERR_IO = 7,
  /* A run aborted, or more than 10% of comparison cells failed. */
  BDS_ERR_RUN_FAILED = 8,
  BDS_ERR_INTERNAL = 9
} bds_status;

BDS_API const char* bds_version(void);
BDS_API const char* bds_status_name(bds_status status);
/* Message of the last failed call on this thread; "" if none. */
BDS_API const char* bds_last_error(void);
BDS_API void bds_string_free(char* s);

/* ---- Gaussian-process surrogate ---------------------------------------- */

typedef struct bds_gp bds_gp;

/* Model over the box [lower, upper] (input_dim entries each) with one output
 * per feature dimension; the prior mean is the midpoint of [feature_lo,
 * feature_hi]. Starts from default hyperparameters. */
BDS_API bds_status bds_gp_create(size_t input_dim, const double* lower, const double* upper,
                                 size_t feature_dim, const double* feature_lo,
                                 const double* feature_hi, bds_gp** out);
BDS_API void bds_gp_destroy(bds_gp* gp);

BDS_API bds_status bds_gp_size(const bds_gp* gp, size_t* observations);
/* lambda has input_dim entries. */
BDS_API bds_status bds_gp_set_params(bds_gp* gp, double theta, const double* lambda, double eta);
BDS_API bds_status bds_gp_get_params(const bds_gp* gp, double* theta, double* lambda, double* eta);
BDS_API bds_status bds_gp_add_observation(bds_gp* gp, const double* x, const double* f);
/* Adds an observation and refits hyperparameters on the default schedule. */
BDS_API bds_status bds_gp_update(bds_gp* gp, const double* x, const double* f, uint64_t seed);
/* Maximizes the log marginal likelihood; *improved is 0 when the fit kept the
 * current parameters. */
BDS_API bds_status bds_gp_fit(bds_gp* gp, uint64_t seed, int* improved);
/* mean and variance have feature_dim entries. */
BDS_API bds_status bds_gp_posterior(const bds_gp* gp, const double* x, double* mean, double* variance);
BDS_API bds_status bds_gp_to_json(const bds_gp* gp, char** json);
BDS_API bds_status bds_gp_from_json(const char* json, bds_gp** out);

BDS_API bds_status bds_matern52(const double* x, const double* x2, size_t dim, double theta,
                                const double* lambda, double* out);

/* ---- Acquisition -------------------------------------------------------- */

typedef enum bds_metric { BDS_METRIC_EUCLIDEAN = 0, BDS_METRIC_ANGULAR = 1 } bds_metric;

/* 1 for an exploration step, 0 for a diversity-optimization step. */
BDS_API bds_status bds_phase_for_step(size_t t, size_t n_exp, size_t n_opt, int* explore);
/* observed is row-major, n_observed x feature_dim. period is ignored for
 * Euclidean features. */
BDS_API bds_status bds_diversity_value_mc(const double* mean, const double* variance, size_t feature_dim,
                                          const double* observed, size_t n_observed, bds_metric metric,
                                          double period, size_t n_mc, uint64_t seed, double* value,
                                          double* std_error);
BDS_API bds_status bds_diversity_value_exact_1d(double mean, double sd, const double* observed,
                                                size_t n_observed, double* value);

/* ---- Rewards -------------------------------------------------------------- */

/* existing is row-major, n_existing x dim. */
BDS_API bds_status bds_novelty_reward(const double* f, size_t dim, const double* existing, size_t n_existing,
                                      double d_threshold, bds_metric metric, double period, double* out);
BDS_API bds_status bds_naturalness_reward(double offset_l1, double c_offset, double* out);
BDS_API bds_status bds_task_reward(int complete, double mean_root_angvel, int safe_landing, double* out);
/* novelty may be NULL when the novelty term is not used. */
BDS_API bds_status bds_stage_reward(double task, double naturalness, const double* novelty, double* out);
BDS_API bds_status bds_runup_reward_highjump(const double* omega, const double* omega_target, size_t dim,
                                             double v_z, double v_z_target, double* out);
BDS_API bds_status bds_runup_reward_obstacle(const double* omega, const double* omega_target, size_t dim,
                                             double* out);

/* ---- Curriculum ------------------------------------------------------------- */

typedef enum bds_task_kind { BDS_TASK_HIGH_JUMP = 0, BDS_TASK_OBSTACLE_JUMP = 1 } bds_task_kind;

typedef struct bds_curriculum_config {
  double z_min;
  double z_max;
  double delta_z;
  double r_threshold;
  bds_task_kind task;
} bds_curriculum_config;

typedef struct bds_curriculum_state {
  double z;
  double accumulator;
} bds_curriculum_state;

BDS_API bds_status bds_curriculum_preset(bds_task_kind task, bds_curriculum_config* out);
BDS_API bds_status bds_curriculum_advance(const bds_curriculum_state* state, double mean_reward,
                                          const bds_curriculum_config* config, bds_curriculum_state* out);
BDS_API bds_status bds_control_frequency(double z, const bds_curriculum_config* config, double* hz);
BDS_API bds_status bds_offset_penalty_coefficient(double z, const bds_curriculum_config* config,
                                                  double* c_offset);

/* ---- Runs ------------------------------------------------------------------- */

/* Returns nonzero to signal a failed evaluation. */
typedef int (*bds_oracle_fn)(void* user, const double* x, size_t input_dim, uint64_t call_seed,
                             double* f_out, size_t feature_dim);

/* Parses a JSON config (NULL or "" for defaults), merge-patches overrides_json
 * (NULL for none) over it and returns the canonical config with every field
 * filled in. Malformed input yields BDS_ERR_CONFIG with line and field in the
 * error message. */
BDS_API bds_status bds_config_resolve(const char* config_json, const char* overrides_json, char** resolved);

/* Single BDS run against the configured oracle. The trace is streamed to
 * trace_path; summary (may be NULL) receives a JSON object with the sample
 * count, failures and distinct-strategy count. */
BDS_API bds_status bds_run(const char* config_json, const char* trace_path, char** summary);

/* Single BDS run against a caller-supplied oracle. Bounds come from the config
 * ("bounds" is required). */
BDS_API bds_status bds_run_with_oracle(const char* config_json, size_t input_dim, size_t feature_dim,
                                       const double* feature_lo, const double* feature_hi,
                                       bds_oracle_fn oracle, void* user, const char* trace_path,
                                       char** summary);

/* Continues a trace to the budget. config_json may be NULL to reuse the
 * configuration recorded in the trace; out_path NULL rewrites in place. */
BDS_API bds_status bds_resume(const char* config_json, const char* trace_path, const char* out_path,
                              char** summary);

/* BDS vs. random search. Writes the JSON report to report_path and a CSV next
 * to it. summary receives the aggregate table as JSON. */
BDS_API bds_status bds_compare(const char* config_json, const char* report_path, char** summary);

/* Human-readable per-step table of a trace. */
BDS_API bds_status bds_report(const char* trace_path, char** text);

#ifdef __cplusplus
}
#endif

#endif

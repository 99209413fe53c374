#ifndef AGECHEM_H
#define AGECHEM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AGECHEM_API __declspec(dllexport)
#else
#define AGECHEM_API __attribute__((visibility("default")))
#endif

typedef enum agechem_status {
  AGECHEM_OK = 0,
  AGECHEM_ERR_ARGUMENT = 1,
  AGECHEM_ERR_DOMAIN = 2,
  AGECHEM_ERR_CONFIG = 3,
  AGECHEM_ERR_CONVERGENCE = 4,
  AGECHEM_ERR_CONTRACTION = 5,
  AGECHEM_ERR_REFINE_GRID = 6,
  AGECHEM_ERR_NUMERIC = 7,
  AGECHEM_ERR_IO = 8,
  AGECHEM_ERR_SPLICE = 9,
  AGECHEM_ERR_STABILITY = 10,
  AGECHEM_ERR_CONSTRUCTION = 11,
  AGECHEM_ERR_INTERNAL = 99
} agechem_status;

typedef struct agechem_model agechem_model;
typedef struct agechem_signal agechem_signal;
typedef struct agechem_state agechem_state;
typedef struct agechem_trajectory agechem_trajectory;
typedef struct agechem_scenario agechem_scenario;

typedef enum agechem_extension { AGECHEM_EXTEND_ZERO = 0, AGECHEM_EXTEND_CONSTANT = 1 } agechem_extension;

/* Uniform-grid profile; values are copied. */
typedef struct agechem_profile {
  double spacing;
  const double* values;
  size_t count;
  agechem_extension extension;
} agechem_profile;

typedef struct agechem_numerics {
  double dt;
  double tol_fp; /* negative: automatic */
  int max_iter;
  double delta_cap;
  double eps_tail_rel;
  double tol_compat;
  int strict_window;
  int keep_history;
} agechem_numerics;

typedef enum agechem_series {
  AGECHEM_SERIES_T = 0,
  AGECHEM_SERIES_S = 1,
  AGECHEM_SERIES_N = 2,
  AGECHEM_SERIES_X = 3,
  AGECHEM_SERIES_D = 4,
  AGECHEM_SERIES_RENEWAL = 5
} agechem_series;

AGECHEM_API const char* agechem_version(void);
AGECHEM_API const char* agechem_status_string(agechem_status status);
/* Message of the last failed call on this thread, "" if none. */
AGECHEM_API const char* agechem_last_error(void);
AGECHEM_API void agechem_string_free(char* s);
AGECHEM_API void agechem_numerics_default(agechem_numerics* out);

AGECHEM_API agechem_status agechem_model_create_monod(double mu_max, double k_s, double s_in,
                                                      const agechem_profile* beta, const agechem_profile* k,
                                                      const agechem_profile* q, agechem_model** out);
AGECHEM_API agechem_status agechem_model_create_haldane(double mu_max, double k_p, double k_i, double s_in,
                                                        const agechem_profile* beta, const agechem_profile* k,
                                                        const agechem_profile* q, agechem_model** out);
AGECHEM_API void agechem_model_free(agechem_model* model);
AGECHEM_API agechem_status agechem_model_growth(const agechem_model* model, double s, double* out);
AGECHEM_API agechem_status agechem_model_constants(const agechem_model* model, double* m_global, double* m_box,
                                                   double* l_mu, double* gamma);
AGECHEM_API agechem_status agechem_model_max_window(const agechem_model* model, double s0, double r, double* out);

/* Piecewise-constant D: value i on [starts[i], starts[i+1]); starts[0] == 0. */
AGECHEM_API agechem_status agechem_signal_create(const double* starts, const double* values, size_t count,
                                                 agechem_signal** out);
AGECHEM_API void agechem_signal_free(agechem_signal* signal);
AGECHEM_API agechem_status agechem_signal_integral(const agechem_signal* signal, double t1, double t2,
                                                   double* out);

AGECHEM_API agechem_status agechem_state_create(double spacing, const double* values, size_t count, double s,
                                                agechem_state** out);
AGECHEM_API agechem_status agechem_state_exponential(const agechem_model* model, double s0, double c,
                                                     double spacing, double eps_tail_rel, agechem_state** out);
AGECHEM_API void agechem_state_free(agechem_state* state);
AGECHEM_API size_t agechem_state_size(const agechem_state* state);
AGECHEM_API double agechem_state_substrate(const agechem_state* state);
AGECHEM_API double agechem_state_spacing(const agechem_state* state);
/* Copies min(count, size) node values. */
AGECHEM_API agechem_status agechem_state_values(const agechem_state* state, double* buffer, size_t count);
AGECHEM_API agechem_status agechem_metric(const agechem_state* a, const agechem_state* b, double* out);

AGECHEM_API agechem_status agechem_advance(const agechem_model* model, const agechem_signal* signal,
                                           const agechem_state* state0, double horizon,
                                           const agechem_numerics* numerics, agechem_trajectory** out);
AGECHEM_API agechem_status agechem_flow_map(const agechem_model* model, const agechem_signal* signal,
                                            const agechem_state* state0, double t,
                                            const agechem_numerics* numerics, agechem_state** out);
AGECHEM_API void agechem_trajectory_free(agechem_trajectory* traj);
AGECHEM_API size_t agechem_trajectory_nodes(const agechem_trajectory* traj);
AGECHEM_API size_t agechem_trajectory_windows(const agechem_trajectory* traj);
AGECHEM_API double agechem_trajectory_max_contraction(const agechem_trajectory* traj);
AGECHEM_API agechem_status agechem_trajectory_series(const agechem_trajectory* traj, agechem_series which,
                                                     double* buffer, size_t count);
AGECHEM_API agechem_status agechem_trajectory_terminal(const agechem_trajectory* traj, agechem_state** out);

AGECHEM_API agechem_status agechem_scenario_load(const char* path, agechem_scenario** out);
AGECHEM_API agechem_status agechem_scenario_parse(const char* text, const char* base_dir, agechem_scenario** out);
AGECHEM_API void agechem_scenario_free(agechem_scenario* scenario);
AGECHEM_API const char* agechem_scenario_output_dir(const agechem_scenario* scenario);

/* Study entry points write their files into out_dir (NULL: the scenario's
   output directory) and return a text summary in *report (free with
   agechem_string_free; report may be NULL). */
AGECHEM_API agechem_status agechem_scenario_simulate(const agechem_scenario* scenario, const char* out_dir,
                                                     int with_validation, int* passed, char** report);
AGECHEM_API agechem_status agechem_scenario_refine(const agechem_scenario* scenario, const char* out_dir,
                                                   int levels, int threads, char** report);
AGECHEM_API agechem_status agechem_scenario_perturb(const agechem_scenario* scenario, const char* out_dir,
                                                    double epsilon, int threads, int* holds, char** report);
/* oracle: "moment" or "upwind". */
AGECHEM_API agechem_status agechem_scenario_oracle_compare(const agechem_scenario* scenario, const char* out_dir,
                                                           const char* oracle, int threads, int* passed,
                                                           char** report);

#ifdef __cplusplus
}
#endif

#endif

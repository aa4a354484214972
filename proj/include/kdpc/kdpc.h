#ifndef KDPC_KDPC_H
#define KDPC_KDPC_H

#include <stddef.h>
#include <stdint.h>

#if defined(KDPC_BUILDING_LIBRARY)
#define KDPC_API __attribute__((visibility("default")))
#else
#define KDPC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kdpc_status {
  KDPC_OK = 0,
  KDPC_ERR_INVALID_ARGUMENT = 1,
  KDPC_ERR_DIMENSION = 2,
  KDPC_ERR_CONFIG = 3,
  KDPC_ERR_PE = 4,       /* past-window Gram matrix not positive definite */
  KDPC_ERR_FIT = 5,
  KDPC_ERR_DIVERGED = 6, /* closed loop diverged; outputs are still written */
  KDPC_ERR_NOT_WARM = 7,
  KDPC_ERR_IO = 8,
  KDPC_ERR_INTERNAL = 9
} kdpc_status;

typedef enum kdpc_step_status {
  KDPC_STEP_WARMUP = 0,
  KDPC_STEP_OPTIMAL = 1,
  KDPC_STEP_INFEASIBLE = 2,
  KDPC_STEP_MAX_ITER = 3
} kdpc_step_status;

typedef enum kdpc_qp_status {
  KDPC_QP_OPTIMAL = 0,
  KDPC_QP_INFEASIBLE = 1,
  KDPC_QP_MAX_ITER = 2
} kdpc_qp_status;

typedef struct kdpc_config kdpc_config;
typedef struct kdpc_predictors kdpc_predictors;
typedef struct kdpc_controller kdpc_controller;

/* Receives one line of progress output (without the newline). */
typedef void (*kdpc_log_fn)(const char* line, void* user);

KDPC_API const char* kdpc_version(void);
KDPC_API const char* kdpc_status_string(kdpc_status status);
/* Message of the last failing call on this thread; "" if none. */
KDPC_API const char* kdpc_last_error(void);
/* NULL restores the default (stdout). Applies to all threads. */
KDPC_API void kdpc_set_log(kdpc_log_fn fn, void* user);

/* Configuration */
KDPC_API kdpc_status kdpc_config_default(kdpc_config** out);
KDPC_API kdpc_status kdpc_config_load(const char* path, kdpc_config** out);
KDPC_API kdpc_status kdpc_config_parse(const char* yaml, kdpc_config** out);
KDPC_API kdpc_status kdpc_config_set_seed(kdpc_config* cfg, uint64_t seed);
KDPC_API kdpc_status kdpc_config_set_output(kdpc_config* cfg, const char* dir);
/* Borrowed pointer, valid until the config is modified or freed. */
KDPC_API const char* kdpc_config_output(const kdpc_config* cfg);
/* Canonical YAML. Writes at most `capacity` bytes including the terminator;
   `needed` (optional) receives the full size including the terminator. */
KDPC_API kdpc_status kdpc_config_to_yaml(const kdpc_config* cfg, char* buffer, size_t capacity,
                                         size_t* needed);
KDPC_API void kdpc_config_free(kdpc_config* cfg);

/* Pipeline stages. Each writes its artifacts and a manifest.json into out_dir. */
KDPC_API kdpc_status kdpc_collect(const kdpc_config* cfg, const char* out_dir);
KDPC_API kdpc_status kdpc_fit(const kdpc_config* cfg, const char* dataset_dir, const char* out_dir);
KDPC_API kdpc_status kdpc_run(const kdpc_config* cfg, const char* predictors_dir,
                              const char* out_dir, int parallel);
/* collect, fit and run into out_dir/{dataset,predictors,results}. */
KDPC_API kdpc_status kdpc_run_all(const kdpc_config* cfg, const char* out_dir, int parallel);

/* Predictors */
KDPC_API kdpc_status kdpc_predictors_load(const char* dir, kdpc_predictors** out);
KDPC_API kdpc_status kdpc_predictors_dims(const kdpc_predictors* p, size_t* t_ini,
                                          size_t* n_horizon, size_t* columns);
/* z_ini = [du_ini; y_ini] (2 t_ini), du (n_horizon) -> y_out (n_horizon). */
KDPC_API kdpc_status kdpc_predict(const kdpc_predictors* p, const double* z_ini, const double* du,
                                  double* y_out);
KDPC_API void kdpc_predictors_free(kdpc_predictors* p);

/* Controller using the controller section of cfg. The predictors handle may
   be freed after creation. */
KDPC_API kdpc_status kdpc_controller_create(const kdpc_predictors* p, const kdpc_config* cfg,
                                            double u_init, kdpc_controller** out);
/* y_ref holds n_horizon future references. Any output pointer may be NULL. */
KDPC_API kdpc_status kdpc_controller_step(kdpc_controller* c, double y_k, const double* y_ref,
                                          double* u_out, kdpc_step_status* status_out);
KDPC_API void kdpc_controller_free(kdpc_controller* c);

/* Dense QP: min 0.5 z'Hz + g'z s.t. A z <= b, lb <= z <= ub. Matrices are
   column-major; A is m x n and may be NULL when m == 0; lb/ub may be NULL
   for no bounds. */
KDPC_API kdpc_status kdpc_qp_solve(size_t n, size_t m, const double* h, const double* g,
                                   const double* a, const double* b, const double* lb,
                                   const double* ub, double tol, size_t max_iter, double* z_out,
                                   double* objective_out, kdpc_qp_status* status_out);

#ifdef __cplusplus
}
#endif

#endif

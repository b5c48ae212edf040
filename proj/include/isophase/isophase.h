#ifndef ISOPHASE_ISOPHASE_H
#define ISOPHASE_ISOPHASE_H

#include <stddef.h>
#include <stdint.h>

#if defined(ISOPHASE_BUILDING)
#define ISOPHASE_API __attribute__((visibility("default")))
#else
#define ISOPHASE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every call returning int returns one of these; on failure the message is
   available from isophase_last_error() on the calling thread. */
enum {
  ISOPHASE_OK = 0,
  ISOPHASE_E_INVALID_ARGUMENT = 1,
  ISOPHASE_E_GRID_MISMATCH = 2,
  ISOPHASE_E_DIVERGENCE = 3,
  ISOPHASE_E_NON_CONVERGENCE = 4,
  ISOPHASE_E_DEGENERATE = 5,
  ISOPHASE_E_NOT_STABLE = 6,
  ISOPHASE_E_PHASE_UNDEFINED = 7,
  ISOPHASE_E_NOT_ATTRACTED = 8,
  ISOPHASE_E_BUDGET = 9,
  ISOPHASE_E_CONFIG = 10,
  ISOPHASE_E_IO = 11,
  ISOPHASE_E_INSUFFICIENT_DATA = 12,
  ISOPHASE_E_INTERNAL = 99
};

typedef struct isophase_config isophase_config;
typedef struct isophase_frame isophase_frame;

ISOPHASE_API const char* isophase_version(void);
ISOPHASE_API const char* isophase_status_name(int status);
ISOPHASE_API const char* isophase_last_error(void);
ISOPHASE_API void isophase_string_free(char* s);

/* Configuration. YAML, or JSON when the path ends in .json. Loading fails with
   ISOPHASE_E_CONFIG and the joined list of "field.path: message" diagnostics. */
ISOPHASE_API int isophase_config_load(const char* path, isophase_config** out);
ISOPHASE_API int isophase_config_parse(const char* text, int is_json, isophase_config** out);
ISOPHASE_API void isophase_config_free(isophase_config* cfg);
/* normalized echo with every default explicit; owned by the handle */
ISOPHASE_API const char* isophase_config_normalized(const isophase_config* cfg);
ISOPHASE_API size_t isophase_config_warning_count(const isophase_config* cfg);
ISOPHASE_API const char* isophase_config_warning(const isophase_config* cfg, size_t i);
/* {"ok", "errors", "warnings", "normalized"} as JSON, free with isophase_string_free.
   Returns ISOPHASE_OK when the report was produced, even for an invalid file. */
ISOPHASE_API int isophase_config_validate(const char* path, char** report_json);

typedef void (*isophase_log_fn)(const char* message, void* user);

typedef struct {
  int has_seed;
  uint64_t seed;
  int threads;         /* > 0 overrides ISOPHASE_THREADS and run.threads */
  const char* out_dir; /* NULL keeps output.dir */
  isophase_log_fn log;
  void* user;
} isophase_run_options;

/* Runs a stage: wave, isochron, derivs, reduce, simulate, compare, exit-stats or all.
   manifest_json may be NULL; otherwise free it with isophase_string_free. */
ISOPHASE_API int isophase_run(const isophase_config* cfg, const char* stage, const isophase_run_options* opt,
                              char** manifest_json);

/* Manifold frame of the configured model. States are component-major arrays of
   components * M doubles. */
typedef struct {
  int M;
  double L;
  int components;
  double speed;
  double b_hat;
  double b_hat_r2;
  double newton_residual;
  double goldstone_residual;
  double adjoint_residual;
} isophase_frame_info;

ISOPHASE_API int isophase_frame_build(const isophase_config* cfg, isophase_frame** out);
ISOPHASE_API void isophase_frame_free(isophase_frame* frame);
ISOPHASE_API int isophase_frame_get_info(const isophase_frame* frame, isophase_frame_info* out);
ISOPHASE_API int isophase_frame_gamma(const isophase_frame* frame, double alpha, double* out, size_t n);

enum { ISOPHASE_PHASE_NEWTON = 0, ISOPHASE_PHASE_FLOW = 1, ISOPHASE_PHASE_VARIATIONAL = 2 };
ISOPHASE_API int isophase_phase(const isophase_frame* frame, const double* x, size_t n, int method, double* phase);

#ifdef __cplusplus
}
#endif

#endif

/* calderonlab — C API for the partial-data Calderón spectral laboratory.
 *
 * Opaque handles + integer status codes. All functions returning clab_status
 * set a thread-local message retrievable with clab_last_error() on failure.
 * Handles are destroyed with their matching _destroy function; destroy is
 * safe on NULL.
 */
#ifndef CALDERONLAB_H
#define CALDERONLAB_H

#include <stddef.h>
#include <stdint.h>

#ifndef CLAB_API
#if defined(_WIN32)
#define CLAB_API __declspec(dllexport)
#else
#define CLAB_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clab_status {
    CLAB_OK = 0,
    CLAB_ERR_INVALID_ARGUMENT = 1,
    CLAB_ERR_CONFIG = 2,
    CLAB_ERR_NON_CONTRACTIVE = 3,
    CLAB_ERR_MAX_ITER = 4,
    CLAB_ERR_IO = 5,
    CLAB_ERR_INTERNAL = 6
} clab_status;

CLAB_API const char* clab_version(void);
/* message for the most recent failure on this thread; never NULL */
CLAB_API const char* clab_last_error(void);

/* ---- grids ---- */
typedef struct clab_grid clab_grid;
CLAB_API clab_status clab_grid_create(int dim, int points_per_axis, double half_length, clab_grid** out);
CLAB_API void clab_grid_destroy(clab_grid* g);
CLAB_API int clab_grid_dim(const clab_grid* g);
CLAB_API int clab_grid_points_per_axis(const clab_grid* g);
CLAB_API double clab_grid_half_length(const clab_grid* g);
CLAB_API double clab_grid_spacing(const clab_grid* g);

/* ---- conductivities ---- */
typedef struct clab_conductivity clab_conductivity;
/* center points at dim doubles (z ignored for dim 2) */
CLAB_API clab_status clab_conductivity_smooth(const clab_grid* g, double amplitude, const double* center,
                                     double radius, clab_conductivity** out);
CLAB_API clab_status clab_conductivity_cone(const clab_grid* g, double amplitude, double exponent,
                                   const double* center, double radius, clab_conductivity** out);
CLAB_API void clab_conductivity_destroy(clab_conductivity* c);
CLAB_API clab_status clab_conductivity_range(const clab_conductivity* c, double* min_out, double* max_out);
CLAB_API double clab_conductivity_support_radius(const clab_conductivity* c);
/* binary field container (see README for the layout) */
CLAB_API clab_status clab_conductivity_save(const clab_conductivity* c, const char* path);

/* ---- CGO solves ---- */
typedef struct clab_cgo_solution clab_cgo_solution;
/* k, eta1, eta2: 3 doubles each; t = s coupling; returns
 * CLAB_ERR_NON_CONTRACTIVE / CLAB_ERR_MAX_ITER when the iteration fails */
CLAB_API clab_status clab_cgo_solve(const clab_conductivity* gamma, const double* k, double s,
                           const double* eta1, const double* eta2, double tol, int max_iter,
                           clab_cgo_solution** out);
CLAB_API void clab_cgo_solution_destroy(clab_cgo_solution* s);
CLAB_API int clab_cgo_iterations(const clab_cgo_solution* s);
CLAB_API double clab_cgo_xdot_half_norm(const clab_cgo_solution* s);
CLAB_API double clab_cgo_equation_residual(const clab_cgo_solution* s);
CLAB_API int clab_cgo_floored_modes(const clab_cgo_solution* s);

/* ---- experiment configs and runs ---- */
typedef struct clab_config clab_config;
CLAB_API clab_status clab_config_default(clab_config** out);
CLAB_API clab_status clab_config_parse(const char* json_text, clab_config** out);
CLAB_API clab_status clab_config_load(const char* path, clab_config** out);
CLAB_API void clab_config_destroy(clab_config* c);
/* canonical JSON dump; caller frees with clab_string_free */
CLAB_API clab_status clab_config_dump(const clab_config* c, char** json_out);
CLAB_API void clab_string_free(char* s);

/* stage: rates | cgo | localize | carleman | dn | decay | unique | all.
 * Writes reports + manifest.json into out_dir. all_pass_out may be NULL. */
CLAB_API clab_status clab_run(const clab_config* c, const char* stage, const char* out_dir, uint64_t seed,
                     int threads, int* all_pass_out);

#ifdef __cplusplus
}
#endif

#endif /* CALDERONLAB_H */

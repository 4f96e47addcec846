#include "calderonlab.h"

#include <cstring>
#include <string>

#include "experiments.hpp"

using namespace calderon;

namespace {

thread_local std::string t_last_error = "";

clab_status fail(clab_status code, const std::string& msg) {
    t_last_error = msg;
    return code;
}

template <class F>
clab_status guarded(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        return fail(CLAB_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(CLAB_ERR_INTERNAL, e.what());
    }
}

RVec to_rvec(const double* p) { return {p[0], p[1], p[2]}; }

}  // namespace

struct clab_grid {
    GridPtr grid;
};
struct clab_conductivity {
    Conductivity cond;
};
struct clab_cgo_solution {
    CgoSolution sol;
};
struct clab_config {
    ExperimentConfig cfg;
};

extern "C" {

const char* clab_version(void) { return kVersion; }

const char* clab_last_error(void) { return t_last_error.c_str(); }

clab_status clab_grid_create(int dim, int points_per_axis, double half_length, clab_grid** out) {
    if (!out) return fail(CLAB_ERR_INVALID_ARGUMENT, "out pointer is null");
    return guarded([&] {
        *out = new clab_grid{PeriodicGrid::make(dim, points_per_axis, half_length)};
        return CLAB_OK;
    });
}

void clab_grid_destroy(clab_grid* g) { delete g; }
int clab_grid_dim(const clab_grid* g) { return g ? g->grid->dim() : 0; }
int clab_grid_points_per_axis(const clab_grid* g) { return g ? g->grid->points_per_axis() : 0; }
double clab_grid_half_length(const clab_grid* g) { return g ? g->grid->half_length() : 0.0; }
double clab_grid_spacing(const clab_grid* g) { return g ? g->grid->spacing() : 0.0; }

clab_status clab_conductivity_smooth(const clab_grid* g, double amplitude, const double* center,
                                     double radius, clab_conductivity** out) {
    if (!g || !center || !out) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new clab_conductivity{synth_smooth(amplitude, to_rvec(center), radius, g->grid)};
        return CLAB_OK;
    });
}

clab_status clab_conductivity_cone(const clab_grid* g, double amplitude, double exponent,
                                   const double* center, double radius, clab_conductivity** out) {
    if (!g || !center || !out) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new clab_conductivity{
            synth_cone(amplitude, exponent, to_rvec(center), radius, g->grid)};
        return CLAB_OK;
    });
}

void clab_conductivity_destroy(clab_conductivity* c) { delete c; }

clab_status clab_conductivity_range(const clab_conductivity* c, double* min_out, double* max_out) {
    if (!c) return fail(CLAB_ERR_INVALID_ARGUMENT, "null conductivity");
    double lo = c->cond.gamma[0].real(), hi = lo;
    for (const auto& v : c->cond.gamma.values()) {
        lo = std::min(lo, v.real());
        hi = std::max(hi, v.real());
    }
    if (min_out) *min_out = lo;
    if (max_out) *max_out = hi;
    return CLAB_OK;
}

double clab_conductivity_support_radius(const clab_conductivity* c) {
    return c ? c->cond.support_radius : 0.0;
}

clab_status clab_conductivity_save(const clab_conductivity* c, const char* path) {
    if (!c || !path) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        try {
            save_field(path, c->cond.gamma);
        } catch (const std::runtime_error& e) {
            return fail(CLAB_ERR_IO, e.what());
        }
        return CLAB_OK;
    });
}

clab_status clab_cgo_solve(const clab_conductivity* gamma, const double* k, double s,
                           const double* eta1, const double* eta2, double tol, int max_iter,
                           clab_cgo_solution** out) {
    if (!gamma || !k || !eta1 || !eta2 || !out)
        return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&]() -> clab_status {
        CgoParameters p = make_zeta_pair(to_rvec(k), s, to_rvec(eta1), to_rvec(eta2));
        LogData log = log_data(gamma->cond);
        MollifierKernel kernel(gamma->cond.gamma.grid().dim());
        CgoSolveOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter;
        opts.domain = {gamma->cond.center, gamma->cond.support_radius};
        CgoSolution sol = solve_w(log, kernel, p.zeta1, opts);
        if (sol.status == CgoStatus::NonContractive)
            return fail(CLAB_ERR_NON_CONTRACTIVE, "fixed-point map is not a contraction at this s");
        if (sol.status == CgoStatus::MaxIter)
            return fail(CLAB_ERR_MAX_ITER, "iteration did not reach tolerance");
        *out = new clab_cgo_solution{std::move(sol)};
        return CLAB_OK;
    });
}

void clab_cgo_solution_destroy(clab_cgo_solution* s) { delete s; }
int clab_cgo_iterations(const clab_cgo_solution* s) {
    return s ? static_cast<int>(s->sol.residual_history.size()) : 0;
}
double clab_cgo_xdot_half_norm(const clab_cgo_solution* s) {
    return s ? s->sol.norm_record.xdot_half : 0.0;
}
double clab_cgo_equation_residual(const clab_cgo_solution* s) {
    return s ? s->sol.eq_residual_rel : 0.0;
}
int clab_cgo_floored_modes(const clab_cgo_solution* s) { return s ? s->sol.floored_modes : 0; }

clab_status clab_config_default(clab_config** out) {
    if (!out) return fail(CLAB_ERR_INVALID_ARGUMENT, "out pointer is null");
    *out = new clab_config{ExperimentConfig{}};
    return CLAB_OK;
}

clab_status clab_config_parse(const char* json_text, clab_config** out) {
    if (!json_text || !out) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    try {
        *out = new clab_config{parse_config(json_text)};
        return CLAB_OK;
    } catch (const std::exception& e) {
        return fail(CLAB_ERR_CONFIG, e.what());
    }
}

clab_status clab_config_load(const char* path, clab_config** out) {
    if (!path || !out) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    try {
        *out = new clab_config{load_config(path)};
        return CLAB_OK;
    } catch (const std::exception& e) {
        return fail(CLAB_ERR_CONFIG, e.what());
    }
}

void clab_config_destroy(clab_config* c) { delete c; }

clab_status clab_config_dump(const clab_config* c, char** json_out) {
    if (!c || !json_out) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    std::string s = config_to_json(c->cfg);
    *json_out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!*json_out) return fail(CLAB_ERR_INTERNAL, "allocation failed");
    std::memcpy(*json_out, s.c_str(), s.size() + 1);
    return CLAB_OK;
}

void clab_string_free(char* s) { std::free(s); }

clab_status clab_run(const clab_config* c, const char* stage, const char* out_dir, uint64_t seed,
                     int threads, int* all_pass_out) {
    if (!c || !stage || !out_dir) return fail(CLAB_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&]() -> clab_status {
        try {
            RunReport rep = run_experiment(c->cfg, stage, out_dir, seed, threads);
            if (all_pass_out) *all_pass_out = rep.all_pass() ? 1 : 0;
            return CLAB_OK;
        } catch (const std::ios_base::failure& e) {
            return fail(CLAB_ERR_IO, e.what());
        }
    });
}

}  // extern "C"

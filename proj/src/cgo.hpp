// Fixed-point construction of the CGO remainder w, assembly of the full CGO
// solution u = e^{-phi_t/2} e^{x.zeta} (1 + w), and the decay sweeps.
//
// The remainder solves
//   (-L + (A_t - A).grad_zeta + q_t) w = (A - A_t).zeta - q_t,
// with L = Delta + 2 zeta.grad and grad_zeta = grad + zeta, iterated as
//   w <- L^{-1}[(A_t - A).grad_zeta w + q_t w] + L^{-1}[(A_t - A).zeta + q_t].
// The discrete characteristic modes (|P_zeta| below the floor) are excluded
// from the iteration and from residual accounting; their count is reported.
#pragma once

#include "bourgain.hpp"
#include "conductivity.hpp"
#include "mollifier.hpp"
#include "rate_table.hpp"

namespace calderon {

ScalarField assemble_rhs(const LogData& log, const MollifiedPair& pair, const CVec& zeta);

// one application of the fixed-point operator (spec semantics: floor-divide)
ScalarField apply_fixed_point(const ScalarField& w, const LogData& log, const MollifiedPair& pair,
                              const CVec& zeta, double floor_eps,
                              FloorPolicy policy = FloorPolicy::Divide);

enum class CgoStatus { Converged, NonContractive, MaxIter };

struct CgoNormRecord {
    double xdot_half = 0.0;
    double l2_on_domain = 0.0;
    double h1_on_domain = 0.0;
    double h2_on_domain = 0.0;
};

struct CgoDomain {
    RVec center{0.0, 0.0, 0.0};
    double radius = 0.0;  // Omega = ball(center, radius); 0 disables restricted norms
};

struct CgoSolveOptions {
    double tol = 1e-8;
    int max_iter = 50;
    double floor_eps = 1e-3;
    bool with_norm_record = true;
    CgoDomain domain;
};

struct CgoSolution {
    CVec zeta;
    double s = 0.0;
    double t_scale = 0.0;  // mollification scale (= s unless overridden)
    ScalarField w;
    std::vector<double> residual_history;  // successive-iterate Xdot^{1/2} distances
    std::vector<double> contraction_ratios;
    CgoStatus status = CgoStatus::MaxIter;
    int floored_modes = 0;
    double eq_residual_rel = 0.0;     // (3.13) residual on the solvable modes / |rhs|
    double eq_residual_domain = 0.0;  // same residual, restricted to Omega, / |1+w| on Omega
    CgoNormRecord norm_record;
};

// t_override <= 0 keeps the t = s coupling
CgoSolution solve_w(const LogData& log, const MollifierKernel& kernel, const CVec& zeta,
                    const CgoSolveOptions& opts, double t_override = 0.0);

void ensure_converged(const CgoSolution& sol);  // throws on NON_CONTRACTIVE / MAX_ITER

// full CGO solution stored as (log-magnitude, phase) to survive e^{s x.eta}
struct CgoField {
    ScalarField log_magnitude;  // real
    ScalarField phase;          // real
    cplx value_at(std::size_t flat) const {
        return std::exp(cplx(log_magnitude[flat].real(), phase[flat].real()));
    }
    ScalarField to_scalar_field() const;  // may overflow for large s*L; guarded at build
};

CgoField build_cgo(const LogData& log, const MollifierKernel& kernel, const CgoSolution& sol);

// per s (median over direction samples): Xdot^{1/2} (decreasing), and the three
// domain-restricted norms normalized by their growth rates (bounded)
RateTable decay_sweep(const LogData& log, const MollifierKernel& kernel, const RVec& k,
                      const std::vector<double>& s_values, int direction_count,
                      const CgoSolveOptions& base_opts);

// smooth 2-cell shell mask around the domain ball, used by the H1/H2 measurement
ScalarField domain_mask_smooth(GridPtr grid, const CgoDomain& dom);

}  // namespace calderon

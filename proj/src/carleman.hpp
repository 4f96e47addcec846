// Term-by-term evaluation of the linear-weight Carleman estimate, the
// boundary-free interior coercivity check, and the trace inequality.
#pragma once

#include "cgo.hpp"
#include "quadrature.hpp"

namespace calderon {

// e^{-t x.eta} (-Laplace) (e^{t x.eta} u) = -Lap u - 2t eta.grad u - t^2 u
ScalarField conjugated_laplacian(const ScalarField& u, double t, const RVec& eta);

// adds (A_t - A).(grad u + t eta u) + q_t u
ScalarField conjugated_perturbed(const ScalarField& u, double t, const RVec& eta,
                                 const LogData& log, const MollifiedPair& pair);

enum class CarlemanMode { Free, Perturbed };

// ||conjugated op u||^2 / (t^2 ||u||^2 + ||grad u||^2) for u supported strictly
// inside the torus box (all boundary terms vanish)
double interior_ratio(const ScalarField& u, double t, const RVec& eta, CarlemanMode mode,
                      const LogData* log = nullptr, const MollifiedPair* pair = nullptr);

struct CarlemanReport {
    double t;
    RVec eta;
    // volume side
    double t2_u_l2_sq;      // t^2 ||u||^2_{L2(Omega)}
    double grad_u_l2_sq;    // ||grad u||^2_{L2(Omega)}
    // boundary terms, labeled by their position in the estimate
    double t2_boundary_u_sq;       // t^2 \oint |u|^2
    double u_dnu_u;                // Re \oint conj(u) d_nu u
    double cross_4t;               // \oint 4t Re(d_nu u d_eta conj(u))
    double grad_sq_2t;             // \oint -2t (nu.eta) |grad u|^2
    double u_sq_2t3;               // \oint 2t^3 (nu.eta) |u|^2
    double rhs_sq;                 // ||conjugated op u||^2_{L2(Omega)}
    double ratio;                  // rhs_sq / volume side
    // inequality slack for trial constants: rhs - [C vol - C' t2 bdry - C'' u dnu + signed terms]
    double slack(double C, double Cp, double Cpp) const;
    std::string to_json() const;
};

CarlemanReport boundary_report(const FieldEval& u, double t, const RVec& eta, const QuadDomain& dom);

struct TraceCheck {
    double lhs;       // \oint u^2
    double bracket;   // ||u|| ||grad u|| + ||u||^2 over Omega
    double fitted_c;  // lhs / bracket
};

TraceCheck trace_check(const FieldEval& u, const QuadDomain& dom);

}  // namespace calderon

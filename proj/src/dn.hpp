// Conservative cell-centered finite-difference solver for div(gamma grad u) = 0
// on a grid-aligned box inside the torus, the Dirichlet-to-Neumann map, the
// eta-partition of the boundary faces, the boundary integral identity, and the
// weighted boundary-decay sweep driven by CGO data.
//
// Cells are torus lattice points; Dirichlet data lives at face centers of the
// box surface. Interior faces carry harmonic-mean conductivities, boundary
// faces the harmonic mean of the adjacent inside/outside samples.
#pragma once

#include <map>

#include "cgo.hpp"
#include "conductivity.hpp"
#include "rate_table.hpp"

namespace calderon {

struct FaceKey {
    int axis;  // 0..2
    int side;  // 0 = low, 1 = high
    bool operator<(const FaceKey& o) const {
        return axis != o.axis ? axis < o.axis : side < o.side;
    }
};

// values on one nb x nb face, row-major over the two free axes in increasing order
using FaceData = std::vector<cplx>;
using BoundaryData = std::map<FaceKey, FaceData>;

class FdDomain {
public:
    // centered box of nb cells per axis; eta and epsilon define the partition
    FdDomain(GridPtr grid, int cells_per_axis, const RVec& eta, double epsilon);

    const PeriodicGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    int cells_per_axis() const { return nb_; }
    int first_cell() const { return i0_; }
    double spacing() const { return grid_->spacing(); }
    double face_area() const;
    double box_lo() const { return lo_; }   // coordinate of the low box face
    double box_hi() const { return hi_; }
    const RVec& eta() const { return eta_; }
    double epsilon() const { return eps_; }

    RVec normal(const FaceKey& f) const;
    bool in_plus_partition(const FaceKey& f) const;  // nu.eta >= epsilon
    // physical coordinates of face centers, row-major like FaceData
    std::vector<std::array<double, 3>> face_coords(const FaceKey& f) const;
    std::array<double, 3> cell_coord(int i, int j, int k) const;

    // restriction of a full torus field to the box cells (row-major nb^3)
    std::vector<cplx> cell_values(const ScalarField& f) const;
    // torus field interpolated at the half-shifted face centers of one face
    FaceData face_values(const ScalarField& f, const FaceKey& key) const;

    BoundaryData trace(const std::function<cplx(const std::array<double, 3>&)>& fn) const;

private:
    GridPtr grid_;
    int nb_, i0_;
    double lo_, hi_;
    RVec eta_;
    double eps_;
};

struct DnResult {
    BoundaryData dirichlet;          // input data
    std::vector<cplx> u;             // interior solution, nb^3 row-major
    BoundaryData flux;               // gamma d_nu u, one-sided second order
    BoundaryData scheme_flux;        // conservative two-point flux
    double conservation_defect;      // |sum scheme_flux * area| / scale
    int cg_iterations;
    double cg_residual;
};

struct FdSolveOptions {
    double cg_tol = 1e-12;
    int cg_max_iter = 20000;
};

DnResult solve_dirichlet(const Conductivity& gamma, const FdDomain& dom, const BoundaryData& f,
                         const FdSolveOptions& opts = {});

BoundaryData dn_apply(const Conductivity& gamma, const FdDomain& dom, const BoundaryData& f,
                      const FdSolveOptions& opts = {});

// <Lambda f, g> in the variational (scheme-flux) pairing
cplx dn_pairing(const DnResult& solved, const BoundaryData& g, const FdDomain& dom);

double boundary_inner(const BoundaryData& a, const BoundaryData& b, const FdDomain& dom);

struct Prop51Result {
    double lhs;
    double rhs;
    double residual;
};

// lhs: volume integral of (sqrt(g1) grad sqrt(g2) - sqrt(g2) grad sqrt(g1)) . grad(u1 u2)
// rhs: boundary sum gamma1 d_nu(ut1 - u2) u1 with ut1 the gamma1-solve of u2's data
Prop51Result prop51_residual(const Conductivity& g1, const Conductivity& g2, const FdDomain& dom,
                             const BoundaryData& f1, const BoundaryData& f2,
                             const FdSolveOptions& opts = {});

// gamma2 = gamma1 + amplitude * prod_j max(0, 1 - (x_j/b)^2)^2: the difference
// vanishes quadratically exactly on the box boundary, so traces and normal
// traces agree while the interiors differ all the way up to the boundary
Conductivity boundary_matched_partner(const Conductivity& gamma1, const FdDomain& dom,
                                      double amplitude);

struct DecayRow {
    double s;
    double delta_u_sq;       // s^2 \oint e^{-2s x.eta} |delta u|^2
    double grad_delta_u_sq;  // \oint e^{-2s x.eta} |grad delta u|^2
    double dnu_u_sq;         // \oint_{+,eps} e^{-2s x.eta} |d_nu u|^2
    bool failed = false;
};

struct DecaySweepResult {
    std::vector<DecayRow> rows;
    Verdict verdict_delta, verdict_grad, verdict_dnu;  // non-increasing over the top half
    bool all_pass() const {
        return verdict_delta != Verdict::Fail && verdict_grad != Verdict::Fail &&
               verdict_dnu != Verdict::Fail;
    }
    std::string to_csv() const;
    std::string to_json() const;
};

// the weighted boundary integrals behind the decay lemmas; u2 is the CGO for
// gamma2 built with Re zeta = +s eta so the Carleman weight cancels its growth.
// The d_nu u integral compares the gamma1- and gamma2- discrete solutions of
// the same trace, which makes the gamma1 == gamma2 control exactly zero.
DecaySweepResult boundary_decay_sweep(const Conductivity& g1, const Conductivity& g2,
                                      const MollifierKernel& kernel, const RVec& k,
                                      const std::vector<double>& s_values, const FdDomain& dom,
                                      const CgoSolveOptions& cgo_opts = {},
                                      const FdSolveOptions& fd_opts = {});

std::string boundary_data_to_csv(const BoundaryData& data, const FdDomain& dom);

}  // namespace calderon

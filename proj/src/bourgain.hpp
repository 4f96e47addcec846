// zeta-pair construction, the conjugated-Laplacian symbol P_zeta, homogeneous
// and inhomogeneous Bourgain norms, the regularized multiplier inverse, and
// the cutoff localization checks.
#pragma once

#include <array>
#include <complex>
#include <vector>

#include "grid.hpp"

namespace calderon {

using CVec = std::array<cplx, 3>;
using RVec = std::array<double, 3>;

struct CgoParameters {
    RVec k;
    double s;
    double r;
    RVec eta1, eta2;
    CVec zeta1, zeta2;
};

// zeta1 = s eta1 + i(k/2 + r eta2), zeta2 = -s eta1 + i(k/2 - r eta2),
// r = sqrt(s^2 - |k|^2/4); requires k.eta1 = k.eta2 = eta1.eta2 = 0
CgoParameters make_zeta_pair(const RVec& k, double s, const RVec& eta1, const RVec& eta2);

// P_zeta(xi) = -|xi|^2 + 2i zeta.xi  (the symbol of Delta + 2 zeta.grad)
cplx symbol_p(const CVec& zeta, const RVec& xi);

// |Re zeta| -- the s-parameter of a null vector in the standard form
double zeta_scale(const CVec& zeta);
double zeta_norm(const CVec& zeta);  // euclidean norm of the complex vector
cplx zeta_dot(const CVec& zeta);     // zeta . zeta (bilinear)

struct BourgainWeight {
    CVec zeta;
    double b;          // exponent, |b| <= 1; +/-(1/2) in practice
    bool homogeneous;  // |P|^b vs (|zeta| + |P|)^b
    double floor;      // absolute modulus floor for homogeneous weights
};

double bourgain_norm(const ScalarField& u, const BourgainWeight& w);

enum class FloorPolicy {
    Divide,     // divide by P with its modulus floored (phase kept)
    Annihilate  // zero out near-characteristic modes
};

struct InverseResult {
    ScalarField field;
    int floored_count;
};

// spectral division by P_zeta; frequencies with |P| below floor_eps * s are
// floored (or annihilated); floor_eps = 0 requires the lattice to stay clear
// of the characteristic set
InverseResult inv_laplacian_zeta(const ScalarField& f, const CVec& zeta, double floor_eps,
                                 FloorPolicy policy = FloorPolicy::Divide);

// forward operator Delta + 2 zeta.grad, applied spectrally
ScalarField apply_conjugated_laplacian(const ScalarField& f, const CVec& zeta);

struct LocalizationRatio {
    std::string name;
    double s;
    double value;
};

struct LocalizationReport {
    std::vector<LocalizationRatio> ratios;  // the five cutoff estimates
    std::string to_json() const;
};

// u_B = cutoff * u; reports the five norm ratios behind the localization
// estimates (floor_eps regularizes the homogeneous weights)
LocalizationReport localization_check(const ScalarField& u, const ScalarField& cutoff,
                                      const CVec& zeta, double floor_eps = 1e-3);

// radial C-infinity cutoff: 1 on |x-center| <= r_inner, 0 beyond r_outer
ScalarField make_ball_cutoff(GridPtr grid, const RVec& center, double r_inner, double r_outer);

// a small direction table with irrational direction cosines, orthonormalized
// against k; returns count (eta1, eta2) pairs
std::vector<std::pair<RVec, RVec>> admissible_directions(const RVec& k, int count);

}  // namespace calderon

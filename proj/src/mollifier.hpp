// Mollifier scale family phi_t = Psi_t * phi and the derived fields
// A_t = grad(phi_t), q_t = (1/2) div A_t - (1/4) A_t.A_t + (1/2) A.A_t,
// plus the empirical rate sweep for the approximation lemma.
//
// Psi is the unit-mass radial bump supported in B(0,1); Psi_t(x) = t^n Psi(tx).
// Mollification acts as the spectral multiplier Psi_hat(xi/t).
#pragma once

#include "conductivity.hpp"
#include "grid.hpp"
#include "rate_table.hpp"

namespace calderon {

class MollifierKernel {
public:
    // dim in {2,3}; the hat table is built once by adaptive quadrature of the
    // radial transform (sin kernel in 3-D, Bessel J0 in 2-D)
    explicit MollifierKernel(int dim);

    int dim() const { return dim_; }
    double mass_constant() const { return mass_constant_; }  // normalizing c_n

    // Psi_hat at radial frequency q >= 0 (real since Psi is radial); |value| <= 1
    double hat_radial(double q) const;
    cplx hat(const std::array<double, 3>& xi) const;

private:
    int dim_;
    double mass_constant_;
    double step_, qmax_;
    std::vector<double> table_;
};

ScalarField mollify(const ScalarField& f, double t, const MollifierKernel& kernel);

struct MollifiedPair {
    double t;
    ScalarField phi_t;
    VectorField a_t;
    ScalarField q_t;
};

MollifiedPair make_pair(const LogData& log, double t, const MollifierKernel& kernel);

// largest admissible mollification scale for rate sweeps on this grid
double rate_scale_limit(const PeriodicGrid& g);

struct RateTarget {
    std::string name;
    double exponent;  // normalized value = measured * t^exponent
    std::function<double(const LogData&, const MollifiedPair&)> measure;
};

// the full target set of the approximation lemma
std::vector<RateTarget> approximation_rate_targets();

RateTable rate_sweep(const LogData& log, const MollifierKernel& kernel,
                     const std::vector<double>& t_values, const std::vector<RateTarget>& targets);

}  // namespace calderon

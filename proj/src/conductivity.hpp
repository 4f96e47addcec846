// Synthetic conductivities: strictly positive, identically 1 outside a support
// ball, with the derived log-conductivity data phi = log(gamma), A = grad(phi).
#pragma once

#include <array>

#include "grid.hpp"

namespace calderon {

enum class RegularityClass { SmoothBump, ConeProfile, Composite };

struct Conductivity {
    ScalarField gamma;        // real, strictly positive, physical representation
    double support_radius;    // gamma == 1 outside this ball
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double lower_bound;       // min over grid, > 0
    RegularityClass regularity_class;
};

struct LogData {
    ScalarField phi;      // log(gamma), pointwise
    VectorField a_field;  // spectral gradient of phi
};

// the C-infinity radial bump, peak-normalized: exp(1 - 1/(1-|y|^2)) on |y|<1
double bump_profile(double r);

// gamma = 1 + amplitude * B((x-center)/radius)
Conductivity synth_smooth(double amplitude, const std::array<double, 3>& center, double radius,
                          GridPtr grid);

// gamma = 1 + amplitude * max(0, 1-|x-center|/radius)^alpha, pre-smoothed by a
// grid-scale binomial filter; alpha > 1 keeps the profile C^1
Conductivity synth_cone(double amplitude, double alpha, const std::array<double, 3>& center,
                        double radius, GridPtr grid);

// wraps an externally assembled positive field (used by the boundary-matched
// pairings of the DN experiments)
Conductivity wrap_field(ScalarField gamma, double support_radius,
                        const std::array<double, 3>& center, RegularityClass tag);

LogData log_data(const Conductivity& gamma);

}  // namespace calderon

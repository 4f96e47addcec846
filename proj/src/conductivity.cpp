#include "conductivity.hpp"

#include <cmath>
#include <stdexcept>

namespace calderon {

double bump_profile(double r) {
    if (r >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

namespace {

void check_fit(const std::array<double, 3>& center, double radius, const PeriodicGrid& g) {
    for (int d = 0; d < g.dim(); ++d)
        if (std::abs(center[d]) + 2.0 * radius > g.half_length())
            throw std::invalid_argument("support ball does not fit in the torus with margin >= radius");
}

ScalarField radial_field(GridPtr grid, const std::array<double, 3>& c, double radius,
                         const std::function<double(double)>& profile) {
    return ScalarField::from_function(grid, [&](const std::array<double, 3>& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - c[k]) * (x[k] - c[k]);
        return cplx(profile(std::sqrt(d2) / radius), 0.0);
    });
}

double min_real(const ScalarField& f) {
    double m = f[0].real();
    for (const auto& v : f.values()) m = std::min(m, v.real());
    return m;
}

// one pass of the [1/4, 1/2, 1/4] filter along each axis; support grows by one
// cell per direction per pass
void binomial_smooth(ScalarField& f) {
    const auto& g = f.grid();
    const int n = g.points_per_axis();
    std::vector<cplx> tmp(f.values().size());
    for (int ax = 0; ax < g.dim(); ++ax) {
        const auto& v = f.values();
        for_each_point(g, [&](std::size_t flat, const std::array<double, 3>&) {
            auto id = g.axis_index(flat);
            auto shift = [&](int delta) {
                std::array<int, 3> j = id;
                j[ax] = (j[ax] + delta + n) % n;
                return g.flat_index(j[0], j[1], j[2]);
            };
            tmp[flat] = 0.25 * v[shift(-1)] + 0.5 * v[flat] + 0.25 * v[shift(1)];
        });
        f.values().swap(tmp);
    }
}

}  // namespace

Conductivity synth_smooth(double amplitude, const std::array<double, 3>& center, double radius,
                          GridPtr grid) {
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
    if (1.0 + std::min(0.0, amplitude) <= 0.0)
        throw std::invalid_argument("amplitude violates positivity of gamma");
    check_fit(center, radius, *grid);
    ScalarField gamma = radial_field(grid, center, radius, [&](double r) {
        return 1.0 + amplitude * bump_profile(r);
    });
    Conductivity out{std::move(gamma), radius, center, 0.0, RegularityClass::SmoothBump};
    out.lower_bound = min_real(out.gamma);
    return out;
}

Conductivity synth_cone(double amplitude, double alpha, const std::array<double, 3>& center,
                        double radius, GridPtr grid) {
    if (!(alpha > 1.0)) throw std::invalid_argument("cone exponent must be > 1 (C^1 requirement)");
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
    if (1.0 + std::min(0.0, amplitude) <= 0.0)
        throw std::invalid_argument("amplitude violates positivity of gamma");
    check_fit(center, radius, *grid);
    ScalarField gamma = radial_field(grid, center, radius, [&](double r) {
        return 1.0 + amplitude * std::pow(std::max(0.0, 1.0 - r), alpha);
    });
    // two binomial passes make the kink grid-representable
    binomial_smooth(gamma);
    binomial_smooth(gamma);
    double grown = radius + 2.0 * grid->spacing() * std::sqrt(double(grid->dim())) + 1e-12;
    Conductivity out{std::move(gamma), grown, center, 0.0, RegularityClass::ConeProfile};
    out.lower_bound = min_real(out.gamma);
    if (out.lower_bound <= 0.0) throw std::invalid_argument("smoothed cone profile lost positivity");
    return out;
}

Conductivity wrap_field(ScalarField gamma, double support_radius,
                        const std::array<double, 3>& center, RegularityClass tag) {
    Conductivity out{std::move(gamma), support_radius, center, 0.0, tag};
    out.lower_bound = min_real(out.gamma);
    if (out.lower_bound <= 0.0) throw std::invalid_argument("conductivity must be strictly positive");
    return out;
}

LogData log_data(const Conductivity& gamma) {
    ScalarField phi(gamma.gamma.grid_ptr(), Representation::Physical);
    const auto& gv = gamma.gamma.values();
    for (std::size_t i = 0; i < gv.size(); ++i) phi[i] = cplx(std::log(gv[i].real()), 0.0);
    LogData out{std::move(phi), {}};
    out.a_field = gradient(out.phi);
    return out;
}

}  // namespace calderon

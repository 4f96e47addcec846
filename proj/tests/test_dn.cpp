#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "dn.hpp"
#include "doctest.h"

using namespace calderon;

namespace {
GridPtr grid32() {
    static GridPtr g = PeriodicGrid::make(3, 32, M_PI / 2);
    return g;
}

Conductivity ones(GridPtr g) {
    return wrap_field(ScalarField(g, Representation::Physical, cplx(1, 0)), 0.1, {0, 0, 0},
                      RegularityClass::SmoothBump);
}
}  // namespace

TEST_CASE("domain construction and the eta partition") {
    auto g = grid32();
    FdDomain dom(g, 24, {0, 0, 1}, 0.5);
    CHECK(dom.cells_per_axis() == 24);
    CHECK(dom.box_hi() - dom.box_lo() == doctest::Approx(24 * g->spacing()));
    CHECK(dom.in_plus_partition({2, 1}));       // top face: nu.eta = 1
    CHECK_FALSE(dom.in_plus_partition({2, 0}));  // bottom: -1
    CHECK_FALSE(dom.in_plus_partition({0, 1}));  // lateral: 0
    FdDomain empty(g, 24, {0, 0, 1}, 1.5);
    for (int ax = 0; ax < 3; ++ax)
        for (int side = 0; side < 2; ++side) CHECK_FALSE(empty.in_plus_partition({ax, side}));
    CHECK_THROWS_AS(FdDomain(g, 3, {0, 0, 1}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(FdDomain(g, 32, {0, 0, 1}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(FdDomain(g, 24, {0, 0, 2}, 0.5), std::invalid_argument);
}

TEST_CASE("solver exactness on linear data") {
    auto g = grid32();
    FdDomain dom(g, 24, {0, 0, 1}, 0.5);
    Conductivity c = ones(g);
    RVec a{0.3, -0.7, 1.1};
    BoundaryData f = dom.trace([&](const std::array<double, 3>& x) {
        return cplx(a[0] * x[0] + a[1] * x[1] + a[2] * x[2], 0);
    });
    DnResult sol = solve_dirichlet(c, dom, f);
    const int nb = dom.cells_per_axis();
    double err = 0;
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            for (int k = 0; k < nb; ++k) {
                auto x = dom.cell_coord(i, j, k);
                err = std::max(err, std::abs(sol.u[(std::size_t(i) * nb + j) * nb + k] -
                                             cplx(a[0] * x[0] + a[1] * x[1] + a[2] * x[2], 0)));
            }
    CHECK(err < 1e-10);
    for (int ax = 0; ax < 3; ++ax)
        for (int side = 0; side < 2; ++side) {
            double expect = (side == 0 ? -1.0 : 1.0) * a[ax];
            for (const auto& v : sol.flux.at({ax, side}))
                CHECK(std::abs(v - cplx(expect, 0)) < 1e-9);
        }
    CHECK(sol.conservation_defect < 1e-10);
}

TEST_CASE("constant data is reproduced with zero flux") {
    auto g = grid32();
    FdDomain dom(g, 24, {0, 0, 1}, 0.5);
    Conductivity c = synth_smooth(0.3, {0, 0, 0}, 0.45, g);
    BoundaryData f = dom.trace([](const std::array<double, 3>&) { return cplx(2.5, 0); });
    DnResult sol = solve_dirichlet(c, dom, f);
    for (const auto& u : sol.u) CHECK(std::abs(u - cplx(2.5, 0)) < 1e-10);
    for (const auto& [k, v] : sol.flux)
        for (const auto& x : v) CHECK(std::abs(x) < 1e-9);
}

TEST_CASE("discrete maximum principle") {
    auto g = grid32();
    FdDomain dom(g, 20, {0, 0, 1}, 0.5);
    Conductivity c = synth_smooth(0.4, {0, 0, 0}, 0.45, g);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        BoundaryData f = dom.trace([&](const std::array<double, 3>&) {
            return cplx(uni(rng), 0);
        });
        double lo = 1e300, hi = -1e300;
        for (const auto& [k, v] : f)
            for (const auto& x : v) {
                lo = std::min(lo, x.real());
                hi = std::max(hi, x.real());
            }
        DnResult sol = solve_dirichlet(c, dom, f);
        for (const auto& u : sol.u) {
            CHECK(u.real() >= lo - 1e-9);
            CHECK(u.real() <= hi + 1e-9);
        }
    }
}

TEST_CASE("dn map symmetry, linearity and homogeneity") {
    auto g = grid32();
    FdDomain dom(g, 24, {0, 0, 1}, 0.5);
    Conductivity c = synth_smooth(0.3, {0, 0, 0}, 0.45, g);
    BoundaryData f = dom.trace([](const std::array<double, 3>& x) {
        return cplx(std::cos(x[0]) * std::sin(1.3 * x[1]) + 0.5 * x[2], 0);
    });
    BoundaryData h = dom.trace([](const std::array<double, 3>& x) {
        return cplx(std::sin(0.9 * x[0] + 0.3) + 0.4 * x[1] * x[2], 0);
    });
    DnResult sf = solve_dirichlet(c, dom, f);
    DnResult sh = solve_dirichlet(c, dom, h);
    cplx ab = dn_pairing(sf, h, dom), ba = dn_pairing(sh, f, dom);
    CHECK(std::abs(ab - ba) <= 1e-6 * std::abs(ab));
    CHECK(sf.conservation_defect <= 1e-8);

    // linearity of dn_apply
    cplx alpha(0.7, 0), beta(-1.3, 0);
    BoundaryData combo;
    for (const auto& [key, v] : f) {
        FaceData d(v.size());
        const auto& hv = h.at(key);
        for (std::size_t i = 0; i < v.size(); ++i) d[i] = alpha * v[i] + beta * hv[i];
        combo[key] = std::move(d);
    }
    BoundaryData flux_combo = dn_apply(c, dom, combo);
    double worst = 0, scale = 0;
    for (const auto& [key, v] : flux_combo) {
        const auto& vf = sf.flux.at(key);
        const auto& vh = sh.flux.at(key);
        for (std::size_t i = 0; i < v.size(); ++i) {
            worst = std::max(worst, std::abs(v[i] - alpha * vf[i] - beta * vh[i]));
            scale = std::max(scale, std::abs(v[i]));
        }
    }
    CHECK(worst <= 1e-9 * scale);

    // gamma and 2 gamma scale the flux exactly
    ScalarField doubled = c.gamma;
    for (auto& v : doubled.values()) v *= 2.0;
    Conductivity c2 = wrap_field(std::move(doubled), c.support_radius, c.center,
                                 RegularityClass::SmoothBump);
    DnResult s2 = solve_dirichlet(c2, dom, f);
    double worst2 = 0, fscale = 0;
    for (const auto& [key, v] : s2.flux) {
        const auto& vf = sf.flux.at(key);
        for (std::size_t i = 0; i < v.size(); ++i) {
            worst2 = std::max(worst2, std::abs(v[i] - 2.0 * vf[i]));
            fscale = std::max(fscale, std::abs(v[i]));
        }
    }
    CHECK(worst2 <= 1e-8 * fscale);
}

TEST_CASE("boundary data validation") {
    auto g = grid32();
    FdDomain dom(g, 16, {0, 0, 1}, 0.5);
    Conductivity c = ones(g);
    BoundaryData partial;
    partial[{0, 0}] = FaceData(16 * 16, cplx(1, 0));
    CHECK_THROWS_AS(solve_dirichlet(c, dom, partial), std::invalid_argument);
}

TEST_CASE("boundary identity") {
    auto g = grid32();
    FdDomain dom(g, 24, {0, 0, 1}, 0.5);
    Conductivity g1 = synth_smooth(0.3, {0.05, 0, 0}, 0.4, g);
    Conductivity g2 = synth_smooth(0.25, {-0.06, 0.03, 0}, 0.38, g);
    BoundaryData f1 = dom.trace([](const std::array<double, 3>& x) {
        return cplx(0.8 * x[0] - 0.2 * x[1], 0);
    });
    BoundaryData f2 = dom.trace([](const std::array<double, 3>& x) {
        return cplx(std::cos(x[0]) * std::sin(x[1]) + 0.3 * x[2], 0);
    });
    SUBCASE("identical pair vanishes exactly") {
        Prop51Result r = prop51_residual(g1, g1, dom, f1, f2);
        CHECK(std::abs(r.lhs) <= 1e-10);
        CHECK(std::abs(r.rhs) <= 1e-10);
    }
    SUBCASE("distinct pair satisfies the identity to discretization order") {
        Prop51Result r = prop51_residual(g1, g2, dom, f1, f2);
        double scale = std::max({std::abs(r.lhs), std::abs(r.rhs), 1e-6});
        CHECK(r.residual <= 0.2 * scale);
    }
    SUBCASE("constant f2 keeps both sides computable") {
        BoundaryData fc = dom.trace([](const std::array<double, 3>&) { return cplx(1.0, 0); });
        Prop51Result r = prop51_residual(g1, g2, dom, f1, fc);
        // u2 is constant, so grad(u1 u2) = const * grad(u1); both sides agree to O(h)
        CHECK(std::isfinite(r.lhs));
        CHECK(std::isfinite(r.rhs));
        CHECK(r.residual <= 0.1 * std::max(1.0, std::abs(r.lhs)));
    }
}

TEST_CASE("boundary matched partner") {
    auto g = grid32();
    FdDomain dom(g, 20, {0, 0, 1}, 0.5);
    Conductivity g1 = synth_smooth(0.2, {0, 0, 0}, 0.75, g);
    Conductivity g2 = boundary_matched_partner(g1, dom, 0.1);
    CHECK(g2.lower_bound > 0);
    // the pair difference vanishes at all box face centers; traces match exactly
    for (int ax = 0; ax < 3; ++ax)
        for (int side = 0; side < 2; ++side) {
            FaceData a = dom.face_values(g1.gamma, {ax, side});
            FaceData b = dom.face_values(g2.gamma, {ax, side});
            for (std::size_t i = 0; i < a.size(); ++i)
                CHECK(std::abs(a[i] - b[i]) < 1e-11);
        }
    // but the interiors genuinely differ
    double dmax = 0;
    for (std::size_t i = 0; i < g1.gamma.values().size(); ++i)
        dmax = std::max(dmax, std::abs(g1.gamma[i] - g2.gamma[i]));
    CHECK(dmax > 0.05);
}

TEST_CASE("decay sweep control is exactly zero") {
    auto g = grid32();
    FdDomain dom(g, 16, {0, 0, 1}, 0.5);
    Conductivity g1 = synth_smooth(0.2, {0, 0, 0}, 0.6, g);
    MollifierKernel kern(3);
    CgoSolveOptions copts;
    copts.max_iter = 80;
    DecaySweepResult r =
        boundary_decay_sweep(g1, g1, kern, {2.0, 0, 0}, {4, 6, 8}, dom, copts);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CHECK_FALSE(row.failed);
        CHECK(row.delta_u_sq == 0.0);
        CHECK(row.grad_delta_u_sq == 0.0);
        CHECK(row.dnu_u_sq == 0.0);
    }
    CHECK(r.all_pass());
    CHECK(r.to_csv().find("delta_u_sq") != std::string::npos);
    CHECK(r.to_json().find("verdicts") != std::string::npos);
}

TEST_CASE("decay sweep distinct pair produces finite rows") {
    auto g = grid32();
    FdDomain dom(g, 16, {0, 0, 1}, 0.5);
    Conductivity g1 = synth_smooth(0.2, {0, 0, 0}, 0.6, g);
    Conductivity g2 = boundary_matched_partner(g1, dom, 0.1);
    MollifierKernel kern(3);
    CgoSolveOptions copts;
    copts.max_iter = 80;
    DecaySweepResult r =
        boundary_decay_sweep(g1, g2, kern, {2.0, 0, 0}, {4, 6, 8}, dom, copts);
    for (const auto& row : r.rows) {
        CHECK_FALSE(row.failed);
        CHECK(row.delta_u_sq > 0.0);
        CHECK(std::isfinite(row.dnu_u_sq));
    }
}

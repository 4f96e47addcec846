#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "bourgain.hpp"
#include "conductivity.hpp"
#include "doctest.h"

using namespace calderon;

namespace {
std::mt19937_64 rng(7);
ScalarField random_field(GridPtr g) {
    std::normal_distribution<double> d(0, 1);
    ScalarField f(g, Representation::Physical);
    for (auto& v : f.values()) v = cplx(d(rng), d(rng));
    return f;
}
}  // namespace

TEST_CASE("zeta pair algebra") {
    RVec k{0, 0, 3.0}, e1{1, 0, 0}, e2{0, 1, 0};
    double s = 8.0;
    CgoParameters p = make_zeta_pair(k, s, e1, e2);
    CHECK(p.r == doctest::Approx(std::sqrt(s * s - 2.25)));
    CHECK(std::abs(zeta_dot(p.zeta1)) <= 1e-12 * s * s);
    CHECK(std::abs(zeta_dot(p.zeta2)) <= 1e-12 * s * s);
    for (int j = 0; j < 3; ++j) {
        cplx sum = p.zeta1[j] + p.zeta2[j];
        CHECK(std::abs(sum - cplx(0.0, k[j])) <= 1e-12 * s);  // zeta1 + zeta2 = ik
        CHECK(p.zeta1[j].real() == doctest::Approx(s * e1[j]));
        CHECK(p.zeta1[j].imag() == doctest::Approx(0.5 * k[j] + p.r * e2[j]));
    }
    CHECK(zeta_scale(p.zeta1) == doctest::Approx(s));
    CHECK(zeta_norm(p.zeta1) == doctest::Approx(s * std::sqrt(2.0)));

    SUBCASE("degenerate and zero-k cases") {
        CgoParameters z = make_zeta_pair({0, 0, 0}, 1.0, e1, e2);
        CHECK(z.r == doctest::Approx(1.0));
        CHECK(std::abs(z.zeta1[0] - cplx(1, 0)) < 1e-14);
        CHECK(std::abs(z.zeta1[1] - cplx(0, 1)) < 1e-14);
        CgoParameters d = make_zeta_pair({0, 0, 3.0}, 1.5, e1, e2);
        CHECK(d.r == doctest::Approx(0.0));
        CHECK(std::abs(zeta_dot(d.zeta1)) <= 1e-12);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(make_zeta_pair({0, 0, 3.0}, 1.0, e1, e2), std::invalid_argument);
        CHECK_THROWS_AS(make_zeta_pair(k, s, {1, 0, 0}, {1, 0, 0}), std::invalid_argument);
        CHECK_THROWS_AS(make_zeta_pair(k, s, {0, 0, 1}, e2), std::invalid_argument);
        CHECK_THROWS_AS(make_zeta_pair(k, s, {2, 0, 0}, e2), std::invalid_argument);
    }
}

TEST_CASE("symbol values") {
    double s = 5.0;
    CVec zeta{cplx(s, 0), cplx(0, -s), cplx(0, 0)};  // s(e1 - i e2)
    CHECK(std::abs(symbol_p(zeta, {0, 0, 0})) == 0.0);
    CHECK(std::abs(symbol_p(zeta, {0, s, 0}) - cplx(s * s, 0)) < 1e-12);
    CHECK(std::abs(symbol_p(zeta, {s, 0, 0}) - cplx(-s * s, 2 * s * s)) < 1e-12);
}

TEST_CASE("bourgain norms on closed forms") {
    auto g = PeriodicGrid::make(3, 16, M_PI / 2);
    double V = g->volume();
    CgoParameters p = make_zeta_pair({0, 0, 2.0}, 6.0, {1, 0, 0}, {0, 1, 0});
    std::array<double, 3> xi0{4.0, -2.0, 2.0};
    ScalarField mode = ScalarField::from_function(g, [&](const std::array<double, 3>& x) {
        return std::polar(1.0, xi0[0] * x[0] + xi0[1] * x[1] + xi0[2] * x[2]);
    });
    double ap = std::abs(symbol_p(p.zeta1, {xi0[0], xi0[1], xi0[2]}));
    for (double b : {0.5, -0.5}) {
        double expect = std::pow(ap, b) * std::sqrt(V);
        CHECK(bourgain_norm(mode, {p.zeta1, b, true, 1e-6}) ==
              doctest::Approx(expect).epsilon(1e-10));
    }
    double zn = zeta_norm(p.zeta1);
    CHECK(bourgain_norm(mode, {p.zeta1, 0.5, false, 0}) ==
          doctest::Approx(std::pow(zn + ap, 0.5) * std::sqrt(V)).epsilon(1e-10));

    ScalarField c(g, Representation::Physical, cplx(3, 0));
    // characteristic content: homogeneous positive order annihilates it
    CHECK(bourgain_norm(c, {p.zeta1, 0.5, true, 0.0}) == 0.0);
    // inhomogeneous negative order sees |zeta|^{-1/2}
    CHECK(bourgain_norm(c, {p.zeta1, -0.5, false, 0}) ==
          doctest::Approx(std::pow(zn, -0.5) * 3 * std::sqrt(V)).epsilon(1e-10));
    CHECK_THROWS_AS(bourgain_norm(c, {p.zeta1, -0.5, true, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(bourgain_norm(c, {p.zeta1, 1.5, true, 1.0}), std::invalid_argument);
}

TEST_CASE("norm scaling and duality") {
    auto g = PeriodicGrid::make(3, 16, M_PI / 2);
    CgoParameters p = make_zeta_pair({0, 0, 2.0}, 6.0, {1, 0, 0}, {0, 1, 0});
    double floor_abs = 1e-3 * p.s;
    ScalarField u = random_field(g), v = random_field(g);
    BourgainWeight wp{p.zeta1, 0.5, true, floor_abs};
    BourgainWeight wm{p.zeta1, -0.5, true, floor_abs};
    double nu = bourgain_norm(u, wp);
    ScalarField cu = u;
    cu *= cplx(0, -2.5);
    CHECK(bourgain_norm(cu, wp) == doctest::Approx(2.5 * nu).epsilon(1e-12));
    // matched floors give an exact weighted Cauchy-Schwarz
    ScalarField us = u.to_spectral(), vs = v.to_spectral();
    cplx pairing = 0;
    for (std::size_t i = 0; i < us.values().size(); ++i)
        pairing += us[i] * std::conj(vs[i]);
    pairing *= g->volume();
    CHECK(std::abs(pairing) <= nu * bourgain_norm(v, wm) * (1 + 1e-12));
}

TEST_CASE("multiplier inverse") {
    auto g = PeriodicGrid::make(3, 32, M_PI / 2);
    CgoParameters p = make_zeta_pair({0, 0, 2.0}, 8.0, {1, 0, 0}, {0, 1, 0});
    SUBCASE("single resolved mode divides by its symbol") {
        std::array<double, 3> xi0{4.0, 2.0, -6.0};
        ScalarField mode = ScalarField::from_function(g, [&](const std::array<double, 3>& x) {
            return std::polar(1.0, xi0[0] * x[0] + xi0[1] * x[1] + xi0[2] * x[2]);
        });
        cplx P = symbol_p(p.zeta1, {xi0[0], xi0[1], xi0[2]});
        auto res = inv_laplacian_zeta(mode, p.zeta1, 1e-3);
        ScalarField expect = mode;
        expect *= 1.0 / P;
        CHECK(sup_norm(res.field - expect) < 1e-12);
    }
    SUBCASE("right inverse on the non-floored modes") {
        ScalarField f = random_field(g);
        auto res = inv_laplacian_zeta(f, p.zeta1, 1e-3, FloorPolicy::Annihilate);
        ScalarField back = apply_conjugated_laplacian(res.field, p.zeta1);
        // compare on the non-floored subspace
        ScalarField fs = f.to_spectral(), bs = back.to_spectral();
        double err = 0, scale = 0;
        for_each_freq(*g, [&](std::size_t i, const std::array<double, 3>& xi) {
            double ap = std::abs(symbol_p(p.zeta1, xi));
            scale += std::norm(fs[i]);
            if (ap >= 1e-3 * p.s) err += std::norm(bs[i] - fs[i]);
        });
        CHECK(std::sqrt(err) <= 1e-10 * std::sqrt(scale));
        CHECK(res.floored_count >= 1);  // at least the zero mode
        CHECK(res.floored_count <= int(g->size() / 1000));
    }
    SUBCASE("constant field hits the floor rule") {
        ScalarField c(g, Representation::Physical, cplx(2, 0));
        auto res = inv_laplacian_zeta(c, p.zeta1, 1e-3, FloorPolicy::Divide);
        CHECK(res.floored_count >= 1);  // always contains the zero mode
        CHECK(res.floored_count <= 4);
        ScalarField spec = res.field.to_spectral();
        // amplitude divided by the floored modulus eps_f * s
        double expect = 2.0 / (1e-3 * p.s);
        for_each_freq(*g, [&](std::size_t i, const std::array<double, 3>& xi) {
            if (std::abs(xi[0]) + std::abs(xi[1]) + std::abs(xi[2]) < 1e-14)
                CHECK(std::abs(spec[i]) == doctest::Approx(expect).epsilon(1e-12));
        });
        auto res0 = inv_laplacian_zeta(c, p.zeta1, 1e-3, FloorPolicy::Annihilate);
        CHECK(sup_norm(res0.field) < 1e-14);
        CHECK_THROWS_AS(inv_laplacian_zeta(c, p.zeta1, 0.0), std::invalid_argument);
    }
}

TEST_CASE("localization ratios") {
    auto g = PeriodicGrid::make(3, 32, M_PI / 2);
    ScalarField cutoff = make_ball_cutoff(g, {0, 0, 0}, 0.8, 1.25);
    CgoParameters p = make_zeta_pair({0, 0, 2.0}, 8.0, {1, 0, 0}, {0, 1, 0});
    SUBCASE("cutoff acts as the identity on enclosed fields") {
        ScalarField u = ScalarField::from_function(g, [](const std::array<double, 3>& x) {
            double r = std::hypot(x[0], x[1], x[2]) / 0.7;
            return cplx(bump_profile(r), 0);
        });
        ScalarField ub = pointwise_multiply(cutoff, u);
        CHECK(sup_norm(ub - u) < 1e-14);
        LocalizationReport rep = localization_check(u, cutoff, p.zeta1);
        CHECK(rep.ratios.size() == 5);
        CHECK(rep.ratios[0].s == doctest::Approx(8.0));
        CHECK(rep.to_json().find("ratio_name") != std::string::npos);
    }
    SUBCASE("a far mode makes the L2 ratio small") {
        std::array<double, 3> xi0{40.0, 40.0, 40.0};  // |xi| >> s
        ScalarField u = ScalarField::from_function(g, [&](const std::array<double, 3>& x) {
            return std::polar(1.0, xi0[0] * x[0] + xi0[1] * x[1] + xi0[2] * x[2]);
        });
        LocalizationReport rep = localization_check(u, cutoff, p.zeta1);
        CHECK(rep.ratios[2].value < 0.2);  // l2 * sqrt(s) / Xdot^{1/2}
    }
    SUBCASE("zero field is rejected") {
        ScalarField z(g, Representation::Physical);
        CHECK_THROWS_AS(localization_check(z, cutoff, p.zeta1), std::invalid_argument);
    }
}

TEST_CASE("admissible directions") {
    RVec k{0, 0, 2.0};
    auto dirs = admissible_directions(k, 3);
    REQUIRE(dirs.size() == 3);
    for (const auto& [e1, e2] : dirs) {
        CHECK(std::abs(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2] - 1.0) < 1e-12);
        CHECK(std::abs(e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2] - 1.0) < 1e-12);
        CHECK(std::abs(e1[0] * e2[0] + e1[1] * e2[1] + e1[2] * e2[2]) < 1e-12);
        CHECK(std::abs(e1[2] * k[2]) < 1e-12);
        CHECK(std::abs(e2[2] * k[2]) < 1e-12);
    }
    // each pair must be valid input for the zeta construction
    for (const auto& [e1, e2] : dirs) CHECK_NOTHROW(make_zeta_pair(k, 8.0, e1, e2));
}

#include "quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace calderon {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration from the Chebyshev-based initial guess
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

QuadDomain QuadDomain::ball(const std::array<double, 3>& c, double R, int n_theta, int n_phi,
                            int n_r) {
    QuadDomain d;
    d.shape_ = "ball";
    d.exact_area_ = 4.0 * M_PI * R * R;
    d.exact_volume_ = 4.0 / 3.0 * M_PI * R * R * R;
    std::vector<double> ct, wt;  // cos(theta) Gauss-Legendre
    gauss_legendre(n_theta, ct, wt);
    const double dphi = 2.0 * M_PI / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        double cth = ct[i], sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
        for (int j = 0; j < n_phi; ++j) {
            double phi = j * dphi;
            std::array<double, 3> nrm{sth * std::cos(phi), sth * std::sin(phi), cth};
            QuadNode q;
            q.normal = nrm;
            q.x = {c[0] + R * nrm[0], c[1] + R * nrm[1], c[2] + R * nrm[2]};
            q.weight = R * R * wt[i] * dphi;
            d.boundary_.push_back(q);
        }
    }
    std::vector<double> rn, rw;
    gauss_legendre(n_r, rn, rw);
    for (int k = 0; k < n_r; ++k) {
        double r = 0.5 * R * (rn[k] + 1.0);
        double wr = 0.5 * R * rw[k] * r * r;
        for (int i = 0; i < n_theta; ++i) {
            double cth = ct[i], sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
            for (int j = 0; j < n_phi; ++j) {
                double phi = j * dphi;
                QuadNode q;
                q.x = {c[0] + r * sth * std::cos(phi), c[1] + r * sth * std::sin(phi),
                       c[2] + r * cth};
                q.normal = {0, 0, 0};
                q.weight = wr * wt[i] * dphi;
                d.interior_.push_back(q);
            }
        }
    }
    return d;
}

QuadDomain QuadDomain::box(const std::array<double, 3>& corner, const std::array<double, 3>& sides,
                           int n_face, int n_interior) {
    QuadDomain d;
    d.shape_ = "box";
    d.exact_area_ = 2.0 * (sides[0] * sides[1] + sides[1] * sides[2] + sides[0] * sides[2]);
    d.exact_volume_ = sides[0] * sides[1] * sides[2];
    std::vector<double> gn, gw;
    gauss_legendre(n_face, gn, gw);
    auto map01 = [&](double t, double lo, double len) { return lo + 0.5 * len * (t + 1.0); };
    for (int ax = 0; ax < 3; ++ax) {
        int u = (ax + 1) % 3, v = (ax + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            double coord = side == 0 ? corner[ax] : corner[ax] + sides[ax];
            std::array<double, 3> nrm{0, 0, 0};
            nrm[ax] = side == 0 ? -1.0 : 1.0;
            for (int i = 0; i < n_face; ++i)
                for (int j = 0; j < n_face; ++j) {
                    QuadNode q;
                    q.x[ax] = coord;
                    q.x[u] = map01(gn[i], corner[u], sides[u]);
                    q.x[v] = map01(gn[j], corner[v], sides[v]);
                    q.normal = nrm;
                    q.weight = 0.25 * sides[u] * sides[v] * gw[i] * gw[j];
                    d.boundary_.push_back(q);
                }
        }
    }
    gauss_legendre(n_interior, gn, gw);
    for (int i = 0; i < n_interior; ++i)
        for (int j = 0; j < n_interior; ++j)
            for (int k = 0; k < n_interior; ++k) {
                QuadNode q;
                q.x = {map01(gn[i], corner[0], sides[0]), map01(gn[j], corner[1], sides[1]),
                       map01(gn[k], corner[2], sides[2])};
                q.normal = {0, 0, 0};
                q.weight = 0.125 * sides[0] * sides[1] * sides[2] * gw[i] * gw[j] * gw[k];
                d.interior_.push_back(q);
            }
    return d;
}

double QuadDomain::surface_area() const {
    double s = 0.0;
    for (const auto& q : boundary_) s += q.weight;
    return s;
}

double QuadDomain::volume() const {
    double s = 0.0;
    for (const auto& q : interior_) s += q.weight;
    return s;
}

double QuadDomain::divergence_selftest() const {
    // int_Omega div F = int_dOmega F.nu for polynomial F
    struct Test {
        std::function<std::array<double, 3>(const std::array<double, 3>&)> F;
        std::function<double(const std::array<double, 3>&)> divF;
    };
    std::vector<Test> tests = {
        {[](const std::array<double, 3>& x) { return std::array<double, 3>{x[0], x[1], x[2]}; },
         [](const std::array<double, 3>&) { return 3.0; }},
        {[](const std::array<double, 3>& x) {
             return std::array<double, 3>{x[0] * x[0], x[1] * x[2], x[2] * x[0]};
         },
         [](const std::array<double, 3>& x) { return 2.0 * x[0] + x[2] + x[0]; }},
        {[](const std::array<double, 3>& x) {
             return std::array<double, 3>{x[1] * x[1] * x[2], x[0] * x[2] * x[2],
                                          x[0] * x[1] * x[2]};
         },
         [](const std::array<double, 3>& x) { return x[0] * x[1]; }}};
    double worst = 0.0;
    for (const auto& t : tests) {
        double vol = 0.0, sur = 0.0, scale = 0.0;
        for (const auto& q : interior_) vol += q.weight * t.divF(q.x);
        for (const auto& q : boundary_) {
            auto F = t.F(q.x);
            sur += q.weight * (F[0] * q.normal[0] + F[1] * q.normal[1] + F[2] * q.normal[2]);
            scale += q.weight * std::abs(F[0] * q.normal[0] + F[1] * q.normal[1] + F[2] * q.normal[2]);
        }
        worst = std::max(worst, std::abs(vol - sur) / std::max(1.0, scale));
    }
    return worst;
}

void QuadDomain::require_selftest(double tol) const {
    if (std::abs(surface_area() - exact_area_) > 1e-6 * exact_area_)
        throw std::runtime_error("quadrature surface-area self-test failed");
    if (std::abs(volume() - exact_volume_) > 1e-6 * exact_volume_)
        throw std::runtime_error("quadrature volume self-test failed");
    if (divergence_selftest() > tol)
        throw std::runtime_error("divergence-theorem self-test exceeded tolerance");
}

SpectralInterpolator::SpectralInterpolator(const ScalarField& f, double drop_tol)
    : dim_(f.grid().dim()) {
    ScalarField s = f.to_spectral();
    double peak = 0.0;
    for (const auto& v : s.values()) peak = std::max(peak, std::abs(v));
    double cut = drop_tol * peak;
    const auto& v = s.values();
    for_each_freq(f.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        if (std::abs(v[i]) > cut) modes_.push_back({xi, v[i]});
    });
}

cplx SpectralInterpolator::value(const std::array<double, 3>& x) const {
    cplx acc = 0.0;
    for (const auto& m : modes_) {
        double ph = m.xi[0] * x[0] + m.xi[1] * x[1] + m.xi[2] * x[2];
        acc += m.coef * std::polar(1.0, ph);
    }
    return acc;
}

std::array<cplx, 3> SpectralInterpolator::gradient(const std::array<double, 3>& x) const {
    std::array<cplx, 3> acc{cplx(0, 0), cplx(0, 0), cplx(0, 0)};
    for (const auto& m : modes_) {
        double ph = m.xi[0] * x[0] + m.xi[1] * x[1] + m.xi[2] * x[2];
        cplx e = m.coef * std::polar(1.0, ph);
        for (int j = 0; j < 3; ++j) acc[j] += cplx(0.0, m.xi[j]) * e;
    }
    return acc;
}

cplx SpectralInterpolator::laplacian(const std::array<double, 3>& x) const {
    cplx acc = 0.0;
    for (const auto& m : modes_) {
        double ph = m.xi[0] * x[0] + m.xi[1] * x[1] + m.xi[2] * x[2];
        double xi2 = m.xi[0] * m.xi[0] + m.xi[1] * m.xi[1] + m.xi[2] * m.xi[2];
        acc += -xi2 * m.coef * std::polar(1.0, ph);
    }
    return acc;
}

FieldEval SpectralInterpolator::as_eval() const {
    return FieldEval{[this](const std::array<double, 3>& x) { return value(x); },
                     [this](const std::array<double, 3>& x) { return gradient(x); },
                     [this](const std::array<double, 3>& x) { return laplacian(x); }};
}

}  // namespace calderon

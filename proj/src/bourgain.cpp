#include "bourgain.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace calderon {

namespace {
double rdot(const RVec& a, const RVec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double rnorm(const RVec& a) { return std::sqrt(rdot(a, a)); }
}  // namespace

CgoParameters make_zeta_pair(const RVec& k, double s, const RVec& eta1, const RVec& eta2) {
    const double tol = 1e-10;
    if (std::abs(rnorm(eta1) - 1.0) > tol || std::abs(rnorm(eta2) - 1.0) > tol)
        throw std::invalid_argument("eta1, eta2 must be unit vectors");
    if (std::abs(rdot(k, eta1)) > tol * std::max(1.0, rnorm(k)) ||
        std::abs(rdot(k, eta2)) > tol * std::max(1.0, rnorm(k)) || std::abs(rdot(eta1, eta2)) > tol)
        throw std::invalid_argument("k, eta1, eta2 must be mutually orthogonal");
    double k2_4 = rdot(k, k) / 4.0;
    if (s * s < k2_4) throw std::invalid_argument("need s^2 >= |k|^2/4");
    CgoParameters p;
    p.k = k;
    p.s = s;
    p.eta1 = eta1;
    p.eta2 = eta2;
    p.r = std::sqrt(s * s - k2_4);
    for (int j = 0; j < 3; ++j) {
        p.zeta1[j] = cplx(s * eta1[j], 0.5 * k[j] + p.r * eta2[j]);
        p.zeta2[j] = cplx(-s * eta1[j], 0.5 * k[j] - p.r * eta2[j]);
    }
    return p;
}

cplx symbol_p(const CVec& zeta, const RVec& xi) {
    double xi2 = rdot(xi, xi);
    cplx zx = zeta[0] * xi[0] + zeta[1] * xi[1] + zeta[2] * xi[2];
    return cplx(-xi2, 0.0) + cplx(0.0, 2.0) * zx;
}

double zeta_scale(const CVec& zeta) {
    double s2 = 0.0;
    for (const auto& z : zeta) s2 += z.real() * z.real();
    return std::sqrt(s2);
}

double zeta_norm(const CVec& zeta) {
    double s2 = 0.0;
    for (const auto& z : zeta) s2 += std::norm(z);
    return std::sqrt(s2);
}

cplx zeta_dot(const CVec& zeta) {
    cplx s = 0.0;
    for (const auto& z : zeta) s += z * z;
    return s;
}

double bourgain_norm(const ScalarField& u, const BourgainWeight& w) {
    if (std::abs(w.b) > 1.0) throw std::invalid_argument("bourgain exponent must be in [-1,1]");
    ScalarField s = u.to_spectral();
    const double zn = zeta_norm(w.zeta);
    double acc = 0.0;
    bool hit_zero = false;
    const auto& v = s.values();
    for_each_freq(u.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        double ap = std::abs(symbol_p(w.zeta, xi));
        double base;
        if (w.homogeneous) {
            base = std::max(ap, w.floor);
            if (base == 0.0) {
                if (w.b < 0.0) hit_zero = true;
                acc += (w.b == 0.0) ? std::norm(v[i]) : 0.0;
                return;
            }
        } else {
            base = zn + ap;
        }
        double wt = std::pow(base, w.b);
        acc += wt * wt * std::norm(v[i]);
    });
    if (hit_zero)
        throw std::invalid_argument(
            "homogeneous negative-order norm needs a positive floor: characteristic lattice mode");
    return std::sqrt(acc * u.grid().volume());
}

InverseResult inv_laplacian_zeta(const ScalarField& f, const CVec& zeta, double floor_eps,
                                 FloorPolicy policy) {
    const double s = zeta_scale(zeta);
    const double floor_abs = floor_eps * s;
    if (floor_eps < 0.0) throw std::invalid_argument("floor must be >= 0");
    ScalarField spec = f.to_spectral();
    auto& v = spec.values();
    int count = 0;
    bool bad = false;
    for_each_freq(f.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        cplx P = symbol_p(zeta, xi);
        double ap = std::abs(P);
        if (ap < floor_abs || ap == 0.0) {
            ++count;
            if (policy == FloorPolicy::Annihilate) {
                v[i] = 0.0;
                return;
            }
            if (floor_abs == 0.0) {
                bad = true;
                return;
            }
            // keep the phase, floor the modulus
            P = (ap == 0.0) ? cplx(floor_abs, 0.0) : P * (floor_abs / ap);
        } else if (floor_eps == 0.0 && ap < 1e-12 * s * s) {
            bad = true;
            return;
        }
        v[i] /= P;
    });
    if (bad)
        throw std::invalid_argument("zero floor with a near-characteristic lattice frequency");
    ScalarField out = (f.representation() == Representation::Physical) ? spec.to_physical()
                                                                       : std::move(spec);
    return {std::move(out), count};
}

ScalarField apply_conjugated_laplacian(const ScalarField& f, const CVec& zeta) {
    ScalarField spec = f.to_spectral();
    auto& v = spec.values();
    for_each_freq(f.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        v[i] *= symbol_p(zeta, xi);
    });
    return (f.representation() == Representation::Physical) ? spec.to_physical() : std::move(spec);
}

std::string LocalizationReport::to_json() const {
    std::ostringstream os;
    os.precision(12);
    os << "[";
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (i) os << ",";
        os << "{\"ratio_name\":\"" << ratios[i].name << "\",\"s\":" << ratios[i].s
           << ",\"value\":" << ratios[i].value << "}";
    }
    os << "]";
    return os.str();
}

LocalizationReport localization_check(const ScalarField& u, const ScalarField& cutoff,
                                      const CVec& zeta, double floor_eps) {
    const double s = zeta_scale(zeta);
    const double floor_abs = floor_eps * s;
    ScalarField ub = pointwise_multiply(cutoff, u);
    auto hom = [&](const ScalarField& f, double b) {
        return bourgain_norm(f, {zeta, b, true, floor_abs});
    };
    auto inh = [&](const ScalarField& f, double b) {
        return bourgain_norm(f, {zeta, b, false, 0.0});
    };
    double u_xdot_half = hom(u, 0.5);
    double u_x_mhalf = inh(u, -0.5);
    if (u_xdot_half == 0.0 || u_x_mhalf == 0.0)
        throw std::invalid_argument("localization check needs a nonzero field");
    LocalizationReport rep;
    rep.ratios.push_back({"xdot_mhalf_over_x_mhalf", s, hom(ub, -0.5) / u_x_mhalf});
    rep.ratios.push_back({"x_half_over_xdot_half", s, inh(ub, 0.5) / u_xdot_half});
    rep.ratios.push_back({"l2_shalf_over_xdot_half", s, l2_norm(ub) * std::sqrt(s) / u_xdot_half});
    rep.ratios.push_back({"hhalf_over_xdot_half", s, sobolev_norm(ub, 0.5) / u_xdot_half});
    rep.ratios.push_back(
        {"h1_over_shalf_xdot_half", s, sobolev_norm(ub, 1.0) / (std::sqrt(s) * u_xdot_half)});
    return rep;
}

ScalarField make_ball_cutoff(GridPtr grid, const RVec& center, double r_inner, double r_outer) {
    if (!(r_outer > r_inner) || !(r_inner > 0.0))
        throw std::invalid_argument("cutoff radii must satisfy 0 < r_inner < r_outer");
    return ScalarField::from_function(grid, [&](const std::array<double, 3>& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - center[k]) * (x[k] - center[k]);
        double r = std::sqrt(d2);
        if (r <= r_inner) return cplx(1.0, 0.0);
        if (r >= r_outer) return cplx(0.0, 0.0);
        double t = (r - r_inner) / (r_outer - r_inner);
        double v = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);  // quintic smoothstep
        return cplx(v, 0.0);
    });
}

std::vector<std::pair<RVec, RVec>> admissible_directions(const RVec& k, int count) {
    // raw directions with irrational cosines; projected orthogonal to k
    static const std::vector<RVec> raw = {
        {1.0, M_SQRT2, 0.0},        {1.0, -1.7320508075688772, 0.5},
        {2.0, 0.5, 2.2360679774997896}, {1.0, 0.0, 1.4142135623730951},
        {0.5, 2.6457513110645907, 1.0}, {1.7320508075688772, 1.0, -1.0}};
    double kn = rnorm(k);
    RVec khat{0.0, 0.0, 0.0};
    if (kn > 0) khat = {k[0] / kn, k[1] / kn, k[2] / kn};
    std::vector<std::pair<RVec, RVec>> out;
    for (const auto& v0 : raw) {
        if (static_cast<int>(out.size()) >= count) break;
        RVec v = v0;
        if (kn > 0) {
            double p = rdot(v, khat);
            for (int j = 0; j < 3; ++j) v[j] -= p * khat[j];
        }
        double n = rnorm(v);
        if (n < 1e-8) continue;
        RVec e1{v[0] / n, v[1] / n, v[2] / n};
        RVec e2;
        if (kn > 0) {
            e2 = {khat[1] * e1[2] - khat[2] * e1[1], khat[2] * e1[0] - khat[0] * e1[2],
                  khat[0] * e1[1] - khat[1] * e1[0]};
        } else {
            RVec helper = (std::abs(e1[0]) < 0.9) ? RVec{1.0, 0.0, 0.0} : RVec{0.0, 1.0, 0.0};
            e2 = {helper[1] * e1[2] - helper[2] * e1[1], helper[2] * e1[0] - helper[0] * e1[2],
                  helper[0] * e1[1] - helper[1] * e1[0]};
            double m = rnorm(e2);
            for (int j = 0; j < 3; ++j) e2[j] /= m;
        }
        out.emplace_back(e1, e2);
    }
    if (out.empty()) throw std::invalid_argument("no admissible directions for this k");
    return out;
}

}  // namespace calderon

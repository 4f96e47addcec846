#include "carleman.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace calderon {

ScalarField conjugated_laplacian(const ScalarField& u, double t, const RVec& eta) {
    ScalarField s = u.to_spectral();
    auto& v = s.values();
    for_each_freq(u.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        double xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        double ex = eta[0] * xi[0] + eta[1] * xi[1] + eta[2] * xi[2];
        v[i] *= cplx(xi2 - t * t, -2.0 * t * ex);
    });
    return (u.representation() == Representation::Physical) ? s.to_physical() : std::move(s);
}

ScalarField conjugated_perturbed(const ScalarField& u, double t, const RVec& eta,
                                 const LogData& log, const MollifiedPair& pair) {
    ScalarField out = conjugated_laplacian(u, t, eta).to_physical();
    ScalarField up = u.to_physical();
    const int d = u.grid().dim();
    std::vector<ScalarField> gu, da;
    for (int j = 0; j < d; ++j) {
        gu.push_back(derivative(up, j).to_physical());
        da.push_back(pair.a_t.comp[j].to_physical() - log.a_field.comp[j].to_physical());
    }
    ScalarField qt = pair.q_t.to_physical();
    for (std::size_t i = 0; i < out.values().size(); ++i) {
        cplx acc = qt[i] * up[i];
        for (int j = 0; j < d; ++j) acc += da[j][i] * (gu[j][i] + t * eta[j] * up[i]);
        out[i] += acc;
    }
    return out;
}

double interior_ratio(const ScalarField& u, double t, const RVec& eta, CarlemanMode mode,
                      const LogData* log, const MollifiedPair* pair) {
    const auto& g = u.grid();
    ScalarField up = u.to_physical();
    double sup = sup_norm(up);
    if (sup == 0.0) throw std::invalid_argument("interior_ratio: zero field");
    // support precondition: u vanishes within 2 cells of the torus boundary
    double margin = 2.0 * g.spacing();
    double edge = g.half_length() - margin;
    double worst = 0.0;
    for_each_point(g, [&](std::size_t i, const std::array<double, 3>& x) {
        for (int d = 0; d < g.dim(); ++d)
            if (x[d] < -edge || x[d] > edge - g.spacing()) {
                worst = std::max(worst, std::abs(up[i]));
                return;
            }
    });
    if (worst > 1e-12 * sup)
        throw std::invalid_argument("interior_ratio: field does not vanish near the domain boundary");

    ScalarField pu;
    if (mode == CarlemanMode::Free) {
        pu = conjugated_laplacian(up, t, eta);
    } else {
        if (!log || !pair) throw std::invalid_argument("perturbed mode needs log data and pair");
        pu = conjugated_perturbed(up, t, eta, *log, *pair);
    }
    double num = l2_norm(pu);
    double un = l2_norm(up);
    double gn2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
        double nd = l2_norm(derivative(up, d));
        gn2 += nd * nd;
    }
    return num * num / (t * t * un * un + gn2);
}

double CarlemanReport::slack(double C, double Cp, double Cpp) const {
    double lhs = C * (t2_u_l2_sq + grad_u_l2_sq) - Cp * t2_boundary_u_sq - Cpp * u_dnu_u +
                 cross_4t + grad_sq_2t + u_sq_2t3;
    return rhs_sq - lhs;
}

std::string CarlemanReport::to_json() const {
    std::ostringstream os;
    os.precision(12);
    os << "{\"t\":" << t << ",\"eta\":[" << eta[0] << "," << eta[1] << "," << eta[2] << "]"
       << ",\"volume_terms\":{\"t2_u_l2_sq\":" << t2_u_l2_sq
       << ",\"grad_u_l2_sq\":" << grad_u_l2_sq << "}"
       << ",\"boundary_terms\":{\"t2_boundary_u_sq\":" << t2_boundary_u_sq
       << ",\"u_dnu_u\":" << u_dnu_u << ",\"cross_4t\":" << cross_4t
       << ",\"grad_sq_2t\":" << grad_sq_2t << ",\"u_sq_2t3\":" << u_sq_2t3 << "}"
       << ",\"rhs_sq\":" << rhs_sq << ",\"ratio\":" << ratio << "}";
    return os.str();
}

CarlemanReport boundary_report(const FieldEval& u, double t, const RVec& eta,
                               const QuadDomain& dom) {
    dom.require_selftest(1e-5);
    CarlemanReport r{};
    r.t = t;
    r.eta = eta;
    for (const auto& q : dom.interior()) {
        cplx uv = u.value(q.x);
        auto gv = u.gradient(q.x);
        cplx lap = u.laplacian(q.x);
        double g2 = std::norm(gv[0]) + std::norm(gv[1]) + std::norm(gv[2]);
        r.t2_u_l2_sq += q.weight * t * t * std::norm(uv);
        r.grad_u_l2_sq += q.weight * g2;
        cplx etag = eta[0] * gv[0] + eta[1] * gv[1] + eta[2] * gv[2];
        cplx op = -lap - 2.0 * t * etag - t * t * uv;
        r.rhs_sq += q.weight * std::norm(op);
    }
    for (const auto& q : dom.boundary()) {
        cplx uv = u.value(q.x);
        auto gv = u.gradient(q.x);
        double nu_eta = q.normal[0] * eta[0] + q.normal[1] * eta[1] + q.normal[2] * eta[2];
        cplx dnu = q.normal[0] * gv[0] + q.normal[1] * gv[1] + q.normal[2] * gv[2];
        cplx deta = eta[0] * gv[0] + eta[1] * gv[1] + eta[2] * gv[2];
        double g2 = std::norm(gv[0]) + std::norm(gv[1]) + std::norm(gv[2]);
        r.t2_boundary_u_sq += q.weight * t * t * std::norm(uv);
        r.u_dnu_u += q.weight * (std::conj(uv) * dnu).real();
        r.cross_4t += q.weight * 4.0 * t * (dnu * std::conj(deta)).real();
        r.grad_sq_2t += q.weight * (-2.0) * t * nu_eta * g2;
        r.u_sq_2t3 += q.weight * 2.0 * t * t * t * nu_eta * std::norm(uv);
    }
    double denom = r.t2_u_l2_sq + r.grad_u_l2_sq;
    r.ratio = denom > 0.0 ? r.rhs_sq / denom : 0.0;
    return r;
}

TraceCheck trace_check(const FieldEval& u, const QuadDomain& dom) {
    dom.require_selftest(1e-5);
    double lhs = 0.0, u2 = 0.0, g2 = 0.0;
    for (const auto& q : dom.boundary()) lhs += q.weight * std::norm(u.value(q.x));
    for (const auto& q : dom.interior()) {
        u2 += q.weight * std::norm(u.value(q.x));
        auto gv = u.gradient(q.x);
        g2 += q.weight * (std::norm(gv[0]) + std::norm(gv[1]) + std::norm(gv[2]));
    }
    if (u2 == 0.0) throw std::invalid_argument("trace_check: zero field");
    double bracket = std::sqrt(u2) * std::sqrt(g2) + u2;
    return {lhs, bracket, lhs / bracket};
}

}  // namespace calderon

#include "cgo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace calderon {

namespace {

struct Workspace {
    GridPtr grid;
    int dim;
    std::vector<ScalarField> da;  // A_t - A (physical, per component)
    ScalarField qt;               // physical
    CVec zeta;
    double floor_abs;
    std::vector<cplx> invP;    // projected 1/P on the lattice (0 on floored modes)
    std::vector<cplx> P;       // symbol values
    std::vector<double> wgt;   // floored |P|^{1/2} weights for the Xdot norm
    int floored = 0;

    Workspace(const LogData& log, const MollifiedPair& pair, const CVec& z, double floor_eps) {
        grid = log.phi.grid_ptr();
        dim = grid->dim();
        zeta = z;
        for (int j = 0; j < dim; ++j)
            da.push_back(pair.a_t.comp[j].to_physical() - log.a_field.comp[j].to_physical());
        qt = pair.q_t.to_physical();
        double s = zeta_scale(z);
        floor_abs = floor_eps * s;
        invP.resize(grid->size());
        P.resize(grid->size());
        wgt.resize(grid->size());
        for_each_freq(*grid, [&](std::size_t i, const std::array<double, 3>& xi) {
            cplx p = symbol_p(z, xi);
            double ap = std::abs(p);
            P[i] = p;
            wgt[i] = std::sqrt(std::max(ap, floor_abs));
            if (ap < floor_abs || ap == 0.0) {
                invP[i] = 0.0;
                ++floored;
            } else {
                invP[i] = 1.0 / p;
            }
        });
    }

    double xdot_half(const std::vector<cplx>& spec) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < spec.size(); ++i) acc += wgt[i] * wgt[i] * std::norm(spec[i]);
        return std::sqrt(acc * grid->volume());
    }

    // (A_t - A).(grad w + zeta w) + q_t w, from the spectral rep of w
    std::vector<cplx> perturbation(const std::vector<cplx>& w_spec,
                                   const std::vector<cplx>& w_phys) const {
        std::vector<cplx> out(grid->size(), cplx(0, 0));
        const auto& dw = grid->deriv_freqs();
        const int n = grid->points_per_axis();
        std::vector<cplx> tmp(grid->size());
        for (int ax = 0; ax < dim; ++ax) {
            for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = w_spec[i];
            std::size_t flat = 0;
            if (dim == 3) {
                for (int i0 = 0; i0 < n; ++i0)
                    for (int i1 = 0; i1 < n; ++i1)
                        for (int i2 = 0; i2 < n; ++i2, ++flat) {
                            double xi = ax == 0 ? dw[i0] : (ax == 1 ? dw[i1] : dw[i2]);
                            tmp[flat] *= cplx(0.0, xi);
                        }
            } else {
                for (int i0 = 0; i0 < n; ++i0)
                    for (int i1 = 0; i1 < n; ++i1, ++flat)
                        tmp[flat] *= cplx(0.0, ax == 0 ? dw[i0] : dw[i1]);
            }
            grid->backward(tmp);
            const auto& dav = da[ax].values();
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += dav[i] * (tmp[i] + zeta[ax] * w_phys[i]);
        }
        const auto& qv = qt.values();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += qv[i] * w_phys[i];
        return out;
    }
};

ScalarField sharp_ball_restrict(const ScalarField& f, const CgoDomain& dom) {
    ScalarField p = f.to_physical();
    double r2 = dom.radius * dom.radius;
    for_each_point(f.grid(), [&](std::size_t i, const std::array<double, 3>& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - dom.center[k]) * (x[k] - dom.center[k]);
        if (d2 > r2) p[i] = 0.0;
    });
    return p;
}

}  // namespace

ScalarField domain_mask_smooth(GridPtr grid, const CgoDomain& dom) {
    const double h = grid->spacing();
    return ScalarField::from_function(grid, [&](const std::array<double, 3>& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - dom.center[k]) * (x[k] - dom.center[k]);
        double r = std::sqrt(d2);
        double t = std::clamp((dom.radius + 2.0 * h - r) / (2.0 * h), 0.0, 1.0);
        return cplx(t * t * (3.0 - 2.0 * t), 0.0);
    });
}

ScalarField assemble_rhs(const LogData& log, const MollifiedPair& pair, const CVec& zeta) {
    const int d = log.phi.grid().dim();
    ScalarField out(log.phi.grid_ptr(), Representation::Physical);
    std::vector<ScalarField> a, at;
    for (int j = 0; j < d; ++j) {
        a.push_back(log.a_field.comp[j].to_physical());
        at.push_back(pair.a_t.comp[j].to_physical());
    }
    ScalarField qt = pair.q_t.to_physical();
    for (std::size_t i = 0; i < out.values().size(); ++i) {
        cplx acc = 0.0;
        for (int j = 0; j < d; ++j) acc += (a[j][i] - at[j][i]) * zeta[j];
        out[i] = acc - qt[i];
    }
    return out;
}

ScalarField apply_fixed_point(const ScalarField& w, const LogData& log, const MollifiedPair& pair,
                              const CVec& zeta, double floor_eps, FloorPolicy policy) {
    const int d = log.phi.grid().dim();
    ScalarField wp = w.to_physical();
    ScalarField arg(log.phi.grid_ptr(), Representation::Physical);
    std::vector<ScalarField> a, at, gw;
    for (int j = 0; j < d; ++j) {
        a.push_back(log.a_field.comp[j].to_physical());
        at.push_back(pair.a_t.comp[j].to_physical());
        gw.push_back(derivative(wp, j).to_physical());
    }
    ScalarField qt = pair.q_t.to_physical();
    for (std::size_t i = 0; i < arg.values().size(); ++i) {
        cplx acc = 0.0;
        for (int j = 0; j < d; ++j) {
            cplx da = at[j][i] - a[j][i];
            acc += da * (gw[j][i] + zeta[j] * wp[i]) + da * zeta[j];
        }
        arg[i] = acc + qt[i] * (wp[i] + 1.0);
    }
    return inv_laplacian_zeta(arg, zeta, floor_eps, policy).field;
}

CgoSolution solve_w(const LogData& log, const MollifierKernel& kernel, const CVec& zeta,
                    const CgoSolveOptions& opts, double t_override) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("cgo tolerance must be positive");
    const double s = zeta_scale(zeta);
    const double t = (t_override > 0.0) ? t_override : s;  // paper couples t = s
    MollifiedPair pair = make_pair(log, t, kernel);
    Workspace ws(log, pair, zeta, opts.floor_eps);

    CgoSolution sol;
    sol.zeta = zeta;
    sol.s = s;
    sol.t_scale = t;
    sol.floored_modes = ws.floored;

    const auto& g = *ws.grid;
    // inhomogeneous term (A_t - A).zeta + q_t = -rhs
    std::vector<cplx> inh(g.size());
    {
        const auto& qv = ws.qt.values();
        for (std::size_t i = 0; i < inh.size(); ++i) {
            cplx acc = qv[i];
            for (int j = 0; j < ws.dim; ++j) acc += ws.da[j].values()[i] * zeta[j];
            inh[i] = acc;
        }
    }
    double rhs_l2;
    {
        ScalarField rhs_f(ws.grid, Representation::Physical, inh);
        rhs_l2 = l2_norm(rhs_f);
    }
    std::vector<cplx> inh_spec = inh;
    g.forward(inh_spec);
    std::vector<cplx> finh(g.size());
    for (std::size_t i = 0; i < finh.size(); ++i) finh[i] = inh_spec[i] * ws.invP[i];

    std::vector<cplx> w_spec(g.size(), cplx(0, 0)), w_phys(g.size(), cplx(0, 0));
    double prev_dist = -1.0;
    int rising = 0;
    sol.status = CgoStatus::MaxIter;
    for (int it = 0; it < opts.max_iter; ++it) {
        std::vector<cplx> pert = ws.perturbation(w_spec, w_phys);
        g.forward(pert);
        std::vector<cplx> wn_spec(g.size());
        for (std::size_t i = 0; i < wn_spec.size(); ++i)
            wn_spec[i] = pert[i] * ws.invP[i] + finh[i];
        std::vector<cplx> diff(g.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = wn_spec[i] - w_spec[i];
        double dist = ws.xdot_half(diff);
        sol.residual_history.push_back(dist);
        if (prev_dist > 0.0) {
            double ratio = dist / prev_dist;
            sol.contraction_ratios.push_back(ratio);
            if (ratio >= 1.0) {
                if (++rising >= 3) {
                    sol.status = CgoStatus::NonContractive;
                    w_spec = std::move(wn_spec);
                    break;
                }
            } else {
                rising = 0;
            }
        }
        prev_dist = dist;
        w_spec = std::move(wn_spec);
        w_phys = w_spec;
        g.backward(w_phys);
        double wnorm = ws.xdot_half(w_spec);
        if (dist <= opts.tol * (1.0 + wnorm)) {
            sol.status = CgoStatus::Converged;
            break;
        }
    }
    sol.w = ScalarField(ws.grid, Representation::Physical, w_phys);

    // (3.13) residual on the solvable modes: P (T(w) - w), computed from one
    // more application of the operator
    {
        std::vector<cplx> pert = ws.perturbation(w_spec, w_phys);
        g.forward(pert);
        std::vector<cplx> resid_spec(g.size());
        for (std::size_t i = 0; i < resid_spec.size(); ++i) {
            cplx tw = pert[i] * ws.invP[i] + finh[i];
            resid_spec[i] = (ws.invP[i] == cplx(0.0, 0.0)) ? cplx(0.0, 0.0)
                                                           : ws.P[i] * (tw - w_spec[i]);
        }
        ScalarField resid(ws.grid, Representation::Spectral, resid_spec);
        sol.eq_residual_rel = l2_norm(resid) / std::max(rhs_l2, 1e-300);
        if (opts.domain.radius > 0.0) {
            ScalarField rphys = resid.to_physical();
            ScalarField one_plus_w(ws.grid, Representation::Physical, w_phys);
            for (auto& v : one_plus_w.values()) v += 1.0;
            double denom = l2_norm(sharp_ball_restrict(one_plus_w, opts.domain));
            sol.eq_residual_domain =
                l2_norm(sharp_ball_restrict(rphys, opts.domain)) / std::max(denom, 1e-300);
        }
    }

    sol.norm_record.xdot_half = ws.xdot_half(w_spec);
    if (opts.with_norm_record && opts.domain.radius > 0.0) {
        sol.norm_record.l2_on_domain = l2_norm(sharp_ball_restrict(sol.w, opts.domain));
        ScalarField mask = domain_mask_smooth(ws.grid, opts.domain);
        ScalarField mw = pointwise_multiply(mask, sol.w);
        double l2 = l2_norm(mw);
        double g1 = 0.0;
        VectorField gmw = gradient(mw);
        for (const auto& c : gmw.comp) {
            double n = l2_norm(c);
            g1 += n * n;
        }
        sol.norm_record.h1_on_domain = std::sqrt(l2 * l2 + g1);
        double hess = hessian_norms(mw).first;
        sol.norm_record.h2_on_domain =
            std::sqrt(sol.norm_record.h1_on_domain * sol.norm_record.h1_on_domain + hess * hess);
    }
    return sol;
}

void ensure_converged(const CgoSolution& sol) {
    if (sol.status == CgoStatus::NonContractive)
        throw std::runtime_error("NON_CONTRACTIVE: fixed-point ratio >= 1 (s too small)");
    if (sol.status == CgoStatus::MaxIter)
        throw std::runtime_error("MAX_ITER: cgo iteration did not reach tolerance");
}

ScalarField CgoField::to_scalar_field() const {
    ScalarField out(log_magnitude.grid_ptr(), Representation::Physical);
    for (std::size_t i = 0; i < out.values().size(); ++i) out[i] = value_at(i);
    return out;
}

CgoField build_cgo(const LogData& log, const MollifierKernel& kernel, const CgoSolution& sol) {
    ensure_converged(sol);
    const auto& g = log.phi.grid();
    if (sol.s * g.half_length() > 600.0)
        throw std::invalid_argument("s * half_length exceeds the magnitude representation limit");
    ScalarField phit = mollify(log.phi, sol.t_scale, kernel).to_physical();
    ScalarField wp = sol.w.to_physical();
    CgoField out{ScalarField(log.phi.grid_ptr(), Representation::Physical),
                 ScalarField(log.phi.grid_ptr(), Representation::Physical)};
    for_each_point(g, [&](std::size_t i, const std::array<double, 3>& x) {
        cplx xz = 0.0;
        for (int j = 0; j < 3; ++j) xz += sol.zeta[j] * x[j];
        cplx opw = 1.0 + wp[i];
        out.log_magnitude[i] =
            cplx(-0.5 * phit[i].real() + xz.real() + std::log(std::abs(opw)), 0.0);
        out.phase[i] = cplx(xz.imag() + std::arg(opw), 0.0);
    });
    return out;
}

RateTable decay_sweep(const LogData& log, const MollifierKernel& kernel, const RVec& k,
                      const std::vector<double>& s_values, int direction_count,
                      const CgoSolveOptions& base_opts) {
    if (s_values.size() < 4) throw std::invalid_argument("decay sweep needs at least 4 scales");
    double limit = log.phi.grid().max_axis_freq();
    for (double s : s_values)
        if (s > limit) throw std::invalid_argument("s exceeds the grid frequency range");

    RateTable table;
    table.parameter_name = "s";
    table.series = {{"w_xdot_half", 0.0, {}, {}, {}},
                    {"w_l2_domain", 0.5, {}, {}, {}},
                    {"w_h1_domain", -0.5, {}, {}, {}},
                    {"w_h2_domain", -1.5, {}, {}, {}}};
    auto dirs = admissible_directions(k, direction_count);
    for (double s : s_values) {
        std::vector<CgoNormRecord> recs;
        bool failed = false;
        for (const auto& [e1, e2] : dirs) {
            CgoParameters p = make_zeta_pair(k, s, e1, e2);
            CgoSolution sol = solve_w(log, kernel, p.zeta1, base_opts);
            if (sol.status != CgoStatus::Converged) {
                failed = true;
                continue;
            }
            recs.push_back(sol.norm_record);
        }
        if (recs.empty()) {
            for (auto& series : table.series) series.samples.push_back({s, 0.0, 0.0, true});
            continue;
        }
        (void)failed;
        auto median_of = [&](auto proj) {
            std::vector<double> v;
            for (const auto& r : recs) v.push_back(proj(r));
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        double xd = median_of([](const CgoNormRecord& r) { return r.xdot_half; });
        double l2 = median_of([](const CgoNormRecord& r) { return r.l2_on_domain; });
        double h1 = median_of([](const CgoNormRecord& r) { return r.h1_on_domain; });
        double h2 = median_of([](const CgoNormRecord& r) { return r.h2_on_domain; });
        table.series[0].samples.push_back({s, xd, xd, false});
        table.series[1].samples.push_back({s, l2, l2 * std::sqrt(s), false});
        table.series[2].samples.push_back({s, h1, h1 / std::sqrt(s), false});
        table.series[3].samples.push_back({s, h2, h2 / std::pow(s, 1.5), false});
    }
    // Xdot^{1/2} must trend down; the three restricted norms track their growth
    // rates within a bounded band
    table.series[0].fitted_slope = fit_loglog_slope(table.series[0].samples);
    table.series[0].verdict = non_increasing_verdict(table.series[0].samples, 0.0);
    for (int i = 1; i < 4; ++i) {
        table.series[i].fitted_slope = fit_loglog_slope(table.series[i].samples);
        table.series[i].verdict = bounded_ratio_verdict(table.series[i].samples, 3.0);
    }
    return table;
}

}  // namespace calderon

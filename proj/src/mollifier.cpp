#include "mollifier.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace calderon {

namespace {

double raw_bump(double r) {  // unnormalized: exp(-1/(1-r^2)) on [0,1)
    if (r >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r * r));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

MollifierKernel::MollifierKernel(int dim) : dim_(dim) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("kernel dim must be 2 or 3");
    double mass_integral;
    if (dim == 3)
        mass_integral = 4.0 * M_PI * integrate([](double r) { return r * r * raw_bump(r); }, 0, 1, 1e-14);
    else
        mass_integral = 2.0 * M_PI * integrate([](double r) { return r * raw_bump(r); }, 0, 1, 1e-14);
    mass_constant_ = 1.0 / mass_integral;

    step_ = 0.05;
    qmax_ = 256.0;
    std::size_t count = static_cast<std::size_t>(qmax_ / step_) + 1;
    table_.resize(count);
    table_[0] = 1.0;
    for (std::size_t i = 1; i < count; ++i) {
        double q = i * step_;
        double v;
        if (dim == 3) {
            v = 4.0 * M_PI / q *
                integrate([&](double r) { return r * std::sin(q * r) * raw_bump(r); }, 0, 1, 3e-13);
        } else {
            v = 2.0 * M_PI *
                integrate([&](double r) { return r * std::cyl_bessel_j(0.0, q * r) * raw_bump(r); },
                          0, 1, 3e-13);
        }
        table_[i] = mass_constant_ * v;
    }
}

double MollifierKernel::hat_radial(double q) const {
    q = std::abs(q);
    if (q >= qmax_ - 2.0 * step_) return 0.0;  // |Psi_hat| < 1e-8 out there
    double u = q / step_;
    std::size_t i = static_cast<std::size_t>(u);
    double f = u - i;
    if (i == 0) {
        // Psi_hat is even in q; fit a + c q^2 + e q^4 so the slope at 0 is exact
        double p0 = table_[0], p1 = table_[1], p2 = table_[2];
        double d1 = p1 - p0, d2 = p2 - p0;
        double c = (16.0 * d1 - d2) / 12.0;
        double e = (d2 - 4.0 * d1) / 12.0;
        double u2 = f * f;
        return p0 + u2 * (c + u2 * e);
    }
    // Catmull-Rom on the interior
    double pm = table_[i - 1], p0 = table_[i], p1 = table_[i + 1], p2 = table_[i + 2];
    double a0 = -0.5 * pm + 1.5 * p0 - 1.5 * p1 + 0.5 * p2;
    double a1 = pm - 2.5 * p0 + 2.0 * p1 - 0.5 * p2;
    double a2 = -0.5 * pm + 0.5 * p1;
    return ((a0 * f + a1) * f + a2) * f + p0;
}

cplx MollifierKernel::hat(const std::array<double, 3>& xi) const {
    double q = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    return cplx(hat_radial(q), 0.0);
}

ScalarField mollify(const ScalarField& f, double t, const MollifierKernel& kernel) {
    if (!(t > 0.0)) throw std::invalid_argument("mollification scale must be positive");
    if (kernel.dim() != f.grid().dim()) throw std::invalid_argument("kernel/grid dim mismatch");
    return apply_multiplier(f, [&](const std::array<double, 3>& xi) {
        double q = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
        return cplx(kernel.hat_radial(q / t), 0.0);
    });
}

MollifiedPair make_pair(const LogData& log, double t, const MollifierKernel& kernel) {
    MollifiedPair out;
    out.t = t;
    out.phi_t = mollify(log.phi, t, kernel);
    out.a_t = gradient(out.phi_t);
    ScalarField div_at = divergence(out.a_t).to_physical();
    const int d = log.phi.grid().dim();
    ScalarField q(log.phi.grid_ptr(), Representation::Physical);
    std::vector<const std::vector<cplx>*> at, a;
    std::vector<ScalarField> at_p, a_p;
    for (int k = 0; k < d; ++k) {
        at_p.push_back(out.a_t.comp[k].to_physical());
        a_p.push_back(log.a_field.comp[k].to_physical());
    }
    for (std::size_t i = 0; i < q.values().size(); ++i) {
        cplx at2 = 0.0, adot = 0.0;
        for (int k = 0; k < d; ++k) {
            at2 += at_p[k][i] * at_p[k][i];
            adot += a_p[k][i] * at_p[k][i];
        }
        q[i] = 0.5 * div_at[i] - 0.25 * at2 + 0.5 * adot;
    }
    out.q_t = std::move(q);
    return out;
}

double rate_scale_limit(const PeriodicGrid& g) { return 0.5 * g.max_axis_freq(); }

std::vector<RateTarget> approximation_rate_targets() {
    auto diff = [](const LogData& log, const MollifiedPair& p) {
        return p.phi_t.to_physical() - log.phi.to_physical();
    };
    std::vector<RateTarget> t;
    t.push_back({"phi_diff_l2", 1.5,
                 [=](const LogData& l, const MollifiedPair& p) { return l2_norm(diff(l, p)); }});
    t.push_back({"phi_diff_h1", 0.5, [=](const LogData& l, const MollifiedPair& p) {
                     return sobolev_norm(diff(l, p), 1.0);
                 }});
    t.push_back({"phi_diff_h3half", 0.0, [=](const LogData& l, const MollifiedPair& p) {
                     return sobolev_norm(diff(l, p), 1.5);
                 }});
    t.push_back({"phi_diff_sup", 1.0,
                 [=](const LogData& l, const MollifiedPair& p) { return sup_norm(diff(l, p)); }});
    t.push_back({"a_diff_sup", 0.0, [](const LogData& l, const MollifiedPair& p) {
                     double m = 0.0;
                     for (int k = 0; k < l.phi.grid().dim(); ++k)
                         m = std::max(m, sup_norm(p.a_t.comp[k].to_physical() -
                                                  l.a_field.comp[k].to_physical()));
                     return m;
                 }});
    t.push_back({"hess_phi_t_l2", -0.5, [](const LogData&, const MollifiedPair& p) {
                     return hessian_norms(p.phi_t).first;
                 }});
    t.push_back({"hess_phi_t_sup", -1.0, [](const LogData&, const MollifiedPair& p) {
                     return hessian_norms(p.phi_t).second;
                 }});
    return t;
}

RateTable rate_sweep(const LogData& log, const MollifierKernel& kernel,
                     const std::vector<double>& t_values, const std::vector<RateTarget>& targets) {
    if (t_values.size() < 4) throw std::invalid_argument("rate sweep needs at least 4 scales");
    for (std::size_t i = 1; i < t_values.size(); ++i)
        if (t_values[i] <= t_values[i - 1])
            throw std::invalid_argument("t values must be strictly increasing");
    double limit = rate_scale_limit(log.phi.grid());
    if (t_values.back() > limit)
        throw std::invalid_argument("largest t exceeds grid resolvability (limit " +
                                    std::to_string(limit) + ")");
    RateTable table;
    table.parameter_name = "t";
    for (const auto& tg : targets) table.series.push_back({tg.name, tg.exponent, {}, {}, {}});
    for (double t : t_values) {
        MollifiedPair pair = make_pair(log, t, kernel);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            double v = targets[k].measure(log, pair);
            table.series[k].samples.push_back({t, v, v * std::pow(t, targets[k].exponent), false});
        }
    }
    for (auto& s : table.series) finalize_series(s, 0.05);
    return table;
}

}  // namespace calderon

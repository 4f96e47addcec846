#include "experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <random>
#include <sstream>

#include "json.hpp"

namespace calderon {

const char* kVersion = "0.1.0";

using nlohmann::json;

ScalarField q_distribution(const Conductivity& g1, const Conductivity& g2) {
    if (!g1.gamma.grid().same_as(g2.gamma.grid()))
        throw std::invalid_argument("conductivities live on different grids");
    LogData l1 = log_data(g1), l2 = log_data(g2);
    ScalarField m = l1.phi - l2.phi;
    ScalarField lap_m = laplacian(m).to_physical();
    const int d = m.grid().dim();
    ScalarField out(m.grid_ptr(), Representation::Physical);
    std::vector<ScalarField> a1, a2;
    for (int j = 0; j < d; ++j) {
        a1.push_back(l1.a_field.comp[j].to_physical());
        a2.push_back(l2.a_field.comp[j].to_physical());
    }
    for (std::size_t i = 0; i < out.values().size(); ++i) {
        cplx s1 = 0.0, s2 = 0.0;
        for (int j = 0; j < d; ++j) {
            s1 += a1[j][i] * a1[j][i];
            s2 += a2[j][i] * a2[j][i];
        }
        out[i] = 0.5 * lap_m[i] + 0.25 * (s1 - s2);
    }
    return out;
}

namespace {

ScalarField plane_wave(GridPtr grid, const RVec& k) {
    return ScalarField::from_function(grid, [&](const std::array<double, 3>& x) {
        return std::polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
    });
}

void check_lattice_frequency(const PeriodicGrid& g, const RVec& k) {
    const double base = M_PI / g.half_length();
    for (int j = 0; j < g.dim(); ++j) {
        double m = k[j] / base;
        if (std::abs(m - std::round(m)) > 1e-9)
            throw std::invalid_argument("k must lie on the frequency lattice");
    }
}

}  // namespace

cplx fourier_pairing(const ScalarField& f, const RVec& k) {
    ScalarField p = f.to_physical();
    cplx acc = 0.0;
    for_each_point(f.grid(), [&](std::size_t i, const std::array<double, 3>& x) {
        acc += p[i] * std::polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
    });
    return acc * f.grid().cell_volume();
}

ProductIdentity product_identity(const Conductivity& g1, const Conductivity& g2, const RVec& k) {
    const auto& g = g1.gamma.grid();
    check_lattice_frequency(g, k);
    // diagnostic route at data resolution: int e^{ixk} g1 g2 q dx
    ProductIdentity out{};
    {
        ScalarField q = q_distribution(g1, g2);
        for (std::size_t i = 0; i < q.values().size(); ++i)
            q[i] *= g1.gamma[i].real() * g2.gamma[i].real();
        out.rhs_qform = fourier_pairing(q, k);
    }
    // oversampled evaluation: band-limited data, pointwise sqrt on the fine grid
    ScalarField G1 = spectral_upsample(g1.gamma, 2), G2 = spectral_upsample(g2.gamma, 2);
    auto gg = G1.grid_ptr();
    ScalarField p(gg, Representation::Physical), q(gg, Representation::Physical);
    for (std::size_t i = 0; i < p.values().size(); ++i) {
        p[i] = std::sqrt(G1[i].real());
        q[i] = std::sqrt(G2[i].real());
    }
    ScalarField ph = plane_wave(gg, k);
    ScalarField pq = pointwise_multiply(p, q);
    ScalarField pq_ph = pointwise_multiply(pq, ph);
    VectorField gp = gradient(p), gq = gradient(q), gpq = gradient(pq_ph);
    cplx lhs = 0.0;
    for (int ax = 0; ax < gg->dim(); ++ax) {
        ScalarField ga = gp.comp[ax].to_physical();
        ScalarField gb = gq.comp[ax].to_physical();
        ScalarField gc = gpq.comp[ax].to_physical();
        for (std::size_t i = 0; i < ga.values().size(); ++i)
            lhs += (p[i] * gb[i] - q[i] * ga[i]) * gc[i];
    }
    lhs *= gg->cell_volume();
    ScalarField lp = laplacian(p).to_physical(), lq = laplacian(q).to_physical();
    cplx rhs = 0.0;
    for (std::size_t i = 0; i < p.values().size(); ++i)
        rhs += ph[i] * p[i] * q[i] * (q[i] * lp[i] - p[i] * lq[i]);
    rhs *= gg->cell_volume();
    out.lhs = lhs;
    out.rhs = rhs;
    out.gap = std::abs(lhs - rhs);
    return out;
}

ConeReport cone_vanishing_check(const Conductivity& g1, const Conductivity& g2, const RVec& eta,
                                double cone_half_angle, std::size_t n_samples) {
    if (!(cone_half_angle > 0.0) || !(cone_half_angle < M_PI / 2.0 + 1e-12))
        throw std::invalid_argument("cone half-angle must lie in (0, pi/2]");
    ScalarField qhat = q_distribution(g1, g2).to_spectral();
    const auto& g = qhat.grid();
    double sin_a = std::sin(cone_half_angle);
    struct Entry {
        double kn;
        std::size_t idx;
        RVec k;
    };
    std::vector<Entry> in_cone;
    double scale = 0.0;
    const auto& v = qhat.values();
    for_each_freq(g, [&](std::size_t i, const std::array<double, 3>& xi) {
        scale = std::max(scale, std::abs(v[i]));
        double kn = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
        if (kn == 0.0) return;
        double ke = xi[0] * eta[0] + xi[1] * eta[1] + xi[2] * eta[2];
        if (std::abs(ke) <= sin_a * kn + 1e-12)
            in_cone.push_back({kn, i, {xi[0], xi[1], xi[2]}});
    });
    if (in_cone.empty()) throw std::invalid_argument("cone contains no lattice frequencies");
    std::sort(in_cone.begin(), in_cone.end(),
              [](const Entry& a, const Entry& b) { return a.kn < b.kn; });
    if (in_cone.size() > n_samples) in_cone.resize(n_samples);
    ConeReport rep;
    rep.scale = scale;
    rep.samples = in_cone.size();
    std::vector<ConeSample> all;
    for (const auto& e : in_cone) {
        double m = std::abs(v[e.idx]);
        all.push_back({e.k, m});
        if (m > rep.max_in_cone) {
            rep.max_in_cone = m;
            rep.argmax = e.k;
        }
    }
    std::sort(all.begin(), all.end(),
              [](const ConeSample& a, const ConeSample& b) { return a.magnitude > b.magnitude; });
    rep.worst.assign(all.begin(), all.begin() + std::min<std::size_t>(8, all.size()));
    return rep;
}

// ---------------- config ----------------

namespace {

struct Validator {
    std::vector<std::string> errors;
    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }
    double num(const json& j, const std::string& path, const char* key, double dflt) {
        if (!j.contains(key)) return dflt;
        if (!j[key].is_number()) {
            fail(path + "." + key, "expected a number");
            return dflt;
        }
        return j[key].get<double>();
    }
    int integer(const json& j, const std::string& path, const char* key, int dflt) {
        if (!j.contains(key)) return dflt;
        if (!j[key].is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return dflt;
        }
        return j[key].get<int>();
    }
    std::string str(const json& j, const std::string& path, const char* key,
                    const std::string& dflt) {
        if (!j.contains(key)) return dflt;
        if (!j[key].is_string()) {
            fail(path + "." + key, "expected a string");
            return dflt;
        }
        return j[key].get<std::string>();
    }
    RVec vec3(const json& j, const std::string& path, const char* key, const RVec& dflt) {
        if (!j.contains(key)) return dflt;
        if (!j[key].is_array() || j[key].size() != 3) {
            fail(path + "." + key, "expected an array of 3 numbers");
            return dflt;
        }
        RVec out;
        for (int i = 0; i < 3; ++i) out[i] = j[key][i].get<double>();
        return out;
    }
    std::vector<double> vec(const json& j, const std::string& path, const char* key,
                            const std::vector<double>& dflt) {
        if (!j.contains(key)) return dflt;
        if (!j[key].is_array()) {
            fail(path + "." + key, "expected an array of numbers");
            return dflt;
        }
        std::vector<double> out;
        for (const auto& x : j[key]) out.push_back(x.get<double>());
        return out;
    }
};

ConductivityConfig parse_cond(Validator& v, const json& j, const std::string& path) {
    ConductivityConfig c;
    c.family = v.str(j, path, "family", c.family);
    if (c.family != "smooth_bump" && c.family != "cone_profile")
        v.fail(path + ".family", "unknown family '" + c.family + "'");
    c.amplitude = v.num(j, path, "amplitude", c.amplitude);
    c.center = v.vec3(j, path, "center", c.center);
    c.radius = v.num(j, path, "radius", c.radius);
    c.exponent = v.num(j, path, "exponent", c.exponent);
    if (!(c.radius > 0)) v.fail(path + ".radius", "must be positive");
    return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config is not valid json: ") + e.what());
    }
    Validator v;
    ExperimentConfig c;
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        c.grid.dim = v.integer(g, "grid", "dim", c.grid.dim);
        c.grid.points_per_axis = v.integer(g, "grid", "points_per_axis", c.grid.points_per_axis);
        c.grid.half_length = v.num(g, "grid", "half_length", c.grid.half_length);
        if (c.grid.dim != 2 && c.grid.dim != 3) v.fail("grid.dim", "must be 2 or 3");
        if (c.grid.points_per_axis < 8 || c.grid.points_per_axis % 2)
            v.fail("grid.points_per_axis", "must be even and >= 8");
        if (!(c.grid.half_length > 0)) v.fail("grid.half_length", "must be positive");
    }
    if (j.contains("conductivity")) c.conductivity = parse_cond(v, j["conductivity"], "conductivity");
    if (j.contains("conductivity2"))
        c.conductivity2 = parse_cond(v, j["conductivity2"], "conductivity2");
    if (j.contains("mollifier"))
        c.mollifier.t_values = v.vec(j["mollifier"], "mollifier", "t_values", c.mollifier.t_values);
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        c.sweep.s_values = v.vec(s, "sweep", "s_values", c.sweep.s_values);
        c.sweep.k = v.vec3(s, "sweep", "k", c.sweep.k);
        c.sweep.direction_count = v.integer(s, "sweep", "direction_count", c.sweep.direction_count);
        c.sweep.localization_fields =
            v.integer(s, "sweep", "localization_fields", c.sweep.localization_fields);
        c.sweep.localization_band =
            v.integer(s, "sweep", "localization_band", c.sweep.localization_band);
    }
    if (j.contains("domain")) {
        const auto& d = j["domain"];
        c.domain.box_cells = v.integer(d, "domain", "box_cells", c.domain.box_cells);
        c.domain.eta = v.vec3(d, "domain", "eta", c.domain.eta);
        c.domain.epsilon = v.num(d, "domain", "epsilon", c.domain.epsilon);
        c.domain.quad_theta = v.integer(d, "domain", "quad_theta", c.domain.quad_theta);
        c.domain.quad_phi = v.integer(d, "domain", "quad_phi", c.domain.quad_phi);
        c.domain.quad_r = v.integer(d, "domain", "quad_r", c.domain.quad_r);
    }
    if (j.contains("decay")) {
        const auto& d = j["decay"];
        c.decay.points_per_axis = v.integer(d, "decay", "points_per_axis", c.decay.points_per_axis);
        c.decay.box_cells = v.integer(d, "decay", "box_cells", c.decay.box_cells);
        c.decay.base_amplitude = v.num(d, "decay", "base_amplitude", c.decay.base_amplitude);
        c.decay.base_radius = v.num(d, "decay", "base_radius", c.decay.base_radius);
        c.decay.wall_amplitude = v.num(d, "decay", "wall_amplitude", c.decay.wall_amplitude);
        c.decay.s_values = v.vec(d, "decay", "s_values", c.decay.s_values);
        c.decay.k_magnitude = v.num(d, "decay", "k_magnitude", c.decay.k_magnitude);
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        c.tolerances.cgo_tol = v.num(t, "tolerances", "cgo_tol", c.tolerances.cgo_tol);
        c.tolerances.cgo_max_iter =
            v.integer(t, "tolerances", "cgo_max_iter", c.tolerances.cgo_max_iter);
        c.tolerances.floor_eps = v.num(t, "tolerances", "floor", c.tolerances.floor_eps);
        c.tolerances.cg_tol = v.num(t, "tolerances", "cg_tol", c.tolerances.cg_tol);
        c.tolerances.carleman_t = v.vec(t, "tolerances", "carleman_t", c.tolerances.carleman_t);
    }
    // cross-field checks
    double axis_max = M_PI / c.grid.half_length * (c.grid.points_per_axis / 2);
    for (double s : c.sweep.s_values)
        if (s > axis_max)
            v.fail("sweep.s_values", "s = " + std::to_string(s) +
                                         " exceeds the grid frequency bound " +
                                         std::to_string(axis_max));
    for (double t : c.mollifier.t_values)
        if (t > 0.5 * axis_max)
            v.fail("mollifier.t_values", "t = " + std::to_string(t) +
                                             " exceeds the resolvability bound " +
                                             std::to_string(0.5 * axis_max));
    if (!v.errors.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& e : v.errors) msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["grid"] = {{"dim", c.grid.dim},
                 {"points_per_axis", c.grid.points_per_axis},
                 {"half_length", c.grid.half_length}};
    auto cond_json = [](const ConductivityConfig& cc) {
        return json{{"family", cc.family},
                    {"amplitude", cc.amplitude},
                    {"center", {cc.center[0], cc.center[1], cc.center[2]}},
                    {"radius", cc.radius},
                    {"exponent", cc.exponent}};
    };
    j["conductivity"] = cond_json(c.conductivity);
    if (c.conductivity2) j["conductivity2"] = cond_json(*c.conductivity2);
    j["mollifier"] = {{"t_values", c.mollifier.t_values}};
    j["sweep"] = {{"s_values", c.sweep.s_values},
                  {"k", {c.sweep.k[0], c.sweep.k[1], c.sweep.k[2]}},
                  {"direction_count", c.sweep.direction_count},
                  {"localization_fields", c.sweep.localization_fields},
                  {"localization_band", c.sweep.localization_band}};
    j["domain"] = {{"box_cells", c.domain.box_cells},
                   {"eta", {c.domain.eta[0], c.domain.eta[1], c.domain.eta[2]}},
                   {"epsilon", c.domain.epsilon},
                   {"quad_theta", c.domain.quad_theta},
                   {"quad_phi", c.domain.quad_phi},
                   {"quad_r", c.domain.quad_r}};
    j["decay"] = {{"points_per_axis", c.decay.points_per_axis},
                  {"box_cells", c.decay.box_cells},
                  {"base_amplitude", c.decay.base_amplitude},
                  {"base_radius", c.decay.base_radius},
                  {"wall_amplitude", c.decay.wall_amplitude},
                  {"s_values", c.decay.s_values},
                  {"k_magnitude", c.decay.k_magnitude}};
    j["tolerances"] = {{"cgo_tol", c.tolerances.cgo_tol},
                       {"cgo_max_iter", c.tolerances.cgo_max_iter},
                       {"floor", c.tolerances.floor_eps},
                       {"cg_tol", c.tolerances.cg_tol},
                       {"carleman_t", c.tolerances.carleman_t}};
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    // FNV-1a over the canonical dump
    std::string s = config_to_json(c);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

Conductivity synth_from_config(const ConductivityConfig& c, GridPtr grid) {
    if (c.family == "smooth_bump") return synth_smooth(c.amplitude, c.center, c.radius, grid);
    if (c.family == "cone_profile")
        return synth_cone(c.amplitude, c.exponent, c.center, c.radius, grid);
    throw std::invalid_argument("unknown conductivity family: " + c.family);
}

// ---------------- runner ----------------

namespace {

std::mutex sink_mutex;

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::lock_guard<std::mutex> lk(sink_mutex);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

ScalarField random_bandlimited(GridPtr grid, int band, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    ScalarField s(grid, Representation::Spectral);
    const double base = M_PI / grid->half_length();
    for_each_freq(*grid, [&](std::size_t i, const std::array<double, 3>& xi) {
        bool in = true;
        for (int j = 0; j < grid->dim(); ++j)
            if (std::abs(xi[j]) > band * base + 1e-12) in = false;
        if (in) s[i] = cplx(gauss(rng), gauss(rng));
    });
    return s.to_physical();
}

struct StageContext {
    const ExperimentConfig& cfg;
    std::filesystem::path out;
    std::uint64_t seed;
};

StageResult stage_rates(const StageContext& ctx) {
    StageResult r{"rates", false, 0.0, {}};
    auto grid = PeriodicGrid::make(ctx.cfg.grid.dim, ctx.cfg.grid.points_per_axis,
                                   ctx.cfg.grid.half_length);
    Conductivity gamma = synth_from_config(ctx.cfg.conductivity, grid);
    LogData log = log_data(gamma);
    MollifierKernel kernel(grid->dim());
    RateTable table = rate_sweep(log, kernel, ctx.cfg.mollifier.t_values,
                                 approximation_rate_targets());
    // sup-norm contraction of the mollifier family
    double phi_sup = sup_norm(log.phi);
    double a_sup = sup_norm(log.a_field);
    bool sup_ok = true;
    for (double t : ctx.cfg.mollifier.t_values) {
        MollifiedPair pair = make_pair(log, t, kernel);
        if (phi_sup > 0 && sup_norm(pair.phi_t) > phi_sup * (1.0 + 1e-8)) sup_ok = false;
        if (a_sup > 0 && sup_norm(pair.a_t) > a_sup * (1.0 + 1e-8)) sup_ok = false;
    }
    write_text(ctx.out / "rates.csv", table.to_csv());
    write_text(ctx.out / "rates.json", table.to_json());
    r.pass = table.all_pass() && sup_ok;
    if (!sup_ok) r.notes.push_back("mollifier sup-norm bound violated");
    for (const auto& s : table.series)
        if (s.verdict == Verdict::Fail) r.notes.push_back(s.name + " trend FAIL");
    return r;
}

StageResult stage_cgo(const StageContext& ctx) {
    StageResult r{"cgo", false, 0.0, {}};
    auto grid = PeriodicGrid::make(ctx.cfg.grid.dim, ctx.cfg.grid.points_per_axis,
                                   ctx.cfg.grid.half_length);
    Conductivity gamma = synth_from_config(ctx.cfg.conductivity, grid);
    LogData log = log_data(gamma);
    MollifierKernel kernel(grid->dim());
    CgoSolveOptions opts;
    opts.tol = ctx.cfg.tolerances.cgo_tol;
    opts.max_iter = ctx.cfg.tolerances.cgo_max_iter;
    opts.floor_eps = ctx.cfg.tolerances.floor_eps;
    opts.domain = {gamma.center, gamma.support_radius};
    RateTable table =
        decay_sweep(log, kernel, ctx.cfg.sweep.k, ctx.cfg.sweep.s_values,
                    ctx.cfg.sweep.direction_count, opts);
    write_text(ctx.out / "cgo_decay.csv", table.to_csv());
    write_text(ctx.out / "cgo_decay.json", table.to_json());

    // convergence diagnostics along the first direction
    json diag = json::array();
    bool conv_ok = true, resid_ok = true;
    auto dirs = admissible_directions(ctx.cfg.sweep.k, 1);
    for (double s : ctx.cfg.sweep.s_values) {
        CgoParameters p = make_zeta_pair(ctx.cfg.sweep.k, s, dirs[0].first, dirs[0].second);
        CgoSolution sol = solve_w(log, kernel, p.zeta1, opts);
        double worst_ratio = 0.0;
        for (std::size_t i = 1; i < sol.contraction_ratios.size(); ++i)
            worst_ratio = std::max(worst_ratio, sol.contraction_ratios[i]);
        if (sol.status != CgoStatus::Converged || worst_ratio >= 0.9) conv_ok = false;
        if (sol.eq_residual_domain > 1e-5) resid_ok = false;
        diag.push_back({{"s", s},
                        {"iterations", sol.residual_history.size()},
                        {"status", sol.status == CgoStatus::Converged ? "converged" : "failed"},
                        {"max_ratio", worst_ratio},
                        {"floored_modes", sol.floored_modes},
                        {"eq_residual_solvable", sol.eq_residual_rel},
                        {"eq_residual_domain", sol.eq_residual_domain},
                        {"xdot_half", sol.norm_record.xdot_half}});
    }
    write_text(ctx.out / "cgo_diag.json", diag.dump(2));
    r.pass = table.all_pass() && conv_ok && resid_ok;
    if (!conv_ok) r.notes.push_back("convergence / contraction-ratio check failed");
    if (!resid_ok) r.notes.push_back("equation residual above 1e-5 of solution scale");
    for (const auto& s : table.series)
        if (s.verdict == Verdict::Fail) r.notes.push_back(s.name + " verdict FAIL");
    return r;
}

StageResult stage_localize(const StageContext& ctx) {
    StageResult r{"localize", false, 0.0, {}};
    auto grid = PeriodicGrid::make(3, ctx.cfg.grid.points_per_axis, ctx.cfg.grid.half_length);
    double rad = ctx.cfg.conductivity.radius;
    double h = grid->spacing();
    double r0 = std::max(0.8, rad + 2 * h);
    double r1 = std::min(r0 + 0.45, 0.92 * grid->half_length());
    ScalarField cutoff = make_ball_cutoff(grid, {0, 0, 0}, r0, r1);
    std::mt19937_64 rng(ctx.seed);
    auto dirs = admissible_directions(ctx.cfg.sweep.k, 1);
    std::map<std::string, std::pair<double, double>> extent;  // name -> (min, max)
    json rows = json::array();
    for (int f = 0; f < ctx.cfg.sweep.localization_fields; ++f) {
        ScalarField u = random_bandlimited(grid, ctx.cfg.sweep.localization_band, rng);
        for (double s : ctx.cfg.sweep.s_values) {
            CgoParameters p = make_zeta_pair(ctx.cfg.sweep.k, s, dirs[0].first, dirs[0].second);
            LocalizationReport rep =
                localization_check(u, cutoff, p.zeta1, ctx.cfg.tolerances.floor_eps);
            for (const auto& ratio : rep.ratios) {
                rows.push_back(
                    {{"ratio_name", ratio.name}, {"s", ratio.s}, {"value", ratio.value}});
                auto it = extent.find(ratio.name);
                if (it == extent.end())
                    extent[ratio.name] = {ratio.value, ratio.value};
                else {
                    it->second.first = std::min(it->second.first, ratio.value);
                    it->second.second = std::max(it->second.second, ratio.value);
                }
            }
        }
    }
    bool ok = true;
    json summary = json::object();
    for (const auto& [name, mm] : extent) {
        double ratio = mm.first > 0 ? mm.second / mm.first : 0.0;
        summary[name] = {{"min", mm.first}, {"max", mm.second}, {"max_over_min", ratio}};
        if (ratio > 10.0) {
            ok = false;
            r.notes.push_back(name + " spread " + std::to_string(ratio) + " exceeds 10");
        }
    }
    write_text(ctx.out / "localize.json",
               json{{"rows", rows}, {"summary", summary}}.dump(2));
    r.pass = ok;
    return r;
}

StageResult stage_carleman(const StageContext& ctx) {
    StageResult r{"carleman", false, 0.0, {}};
    auto grid = PeriodicGrid::make(3, ctx.cfg.grid.points_per_axis, ctx.cfg.grid.half_length);
    Conductivity gamma = synth_from_config(ctx.cfg.conductivity, grid);
    LogData log = log_data(gamma);
    MollifierKernel kernel(3);
    double bump_r = std::min(1.2, grid->half_length() - 3 * grid->spacing());
    ScalarField u = ScalarField::from_function(grid, [&](const std::array<double, 3>& x) {
        double d = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        return cplx(bump_profile(d / bump_r), 0.0);
    });
    RVec eta = ctx.cfg.domain.eta;
    json ratios = json::array();
    double min_ratio = 1e300;
    for (double t : ctx.cfg.tolerances.carleman_t) {
        double free_ratio = interior_ratio(u, t, eta, CarlemanMode::Free);
        MollifiedPair pair = make_pair(log, t, kernel);
        double pert_ratio = interior_ratio(u, t, eta, CarlemanMode::Perturbed, &log, &pair);
        min_ratio = std::min({min_ratio, free_ratio, pert_ratio});
        ratios.push_back({{"t", t}, {"free", free_ratio}, {"perturbed", pert_ratio}});
    }
    bool interior_ok = min_ratio >= 0.1;

    // closed-form sphere report for u = x.e3
    FieldEval linear{[](const std::array<double, 3>& x) { return cplx(x[2], 0.0); },
                     [](const std::array<double, 3>&) {
                         return std::array<cplx, 3>{cplx(0, 0), cplx(0, 0), cplx(1, 0)};
                     },
                     [](const std::array<double, 3>&) { return cplx(0, 0); }};
    QuadDomain ball = QuadDomain::ball({0, 0, 0}, 1.0, ctx.cfg.domain.quad_theta,
                                       ctx.cfg.domain.quad_phi, ctx.cfg.domain.quad_r);
    double t0 = 7.0;
    CarlemanReport rep = boundary_report(linear, t0, {0, 0, 1}, ball);
    const double pi = M_PI;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    bool sphere_ok = rel(rep.t2_boundary_u_sq, t0 * t0 * 4 * pi / 3) < 1e-6 &&
                     rel(rep.u_dnu_u, 4 * pi / 3) < 1e-6 && rel(rep.cross_4t, 0.0) < 1e-6 &&
                     rel(rep.grad_sq_2t, 0.0) < 1e-6 && rel(rep.u_sq_2t3, 0.0) < 1e-6 &&
                     rel(rep.t2_u_l2_sq, t0 * t0 * 4 * pi / 15) < 1e-6 &&
                     rel(rep.grad_u_l2_sq, 4 * pi / 3) < 1e-6 &&
                     rel(rep.rhs_sq, 4 * t0 * t0 * 4 * pi / 3 + std::pow(t0, 4) * 4 * pi / 15) < 1e-6;

    // trace closed forms and the random ensemble
    FieldEval one{[](const std::array<double, 3>&) { return cplx(1, 0); },
                  [](const std::array<double, 3>&) {
                      return std::array<cplx, 3>{cplx(0, 0), cplx(0, 0), cplx(0, 0)};
                  },
                  [](const std::array<double, 3>&) { return cplx(0, 0); }};
    QuadDomain cube = QuadDomain::box({-0.5, -0.5, -0.5}, {1, 1, 1}, 24, 24);
    TraceCheck tc_cube = trace_check(one, cube);
    TraceCheck tc_ball = trace_check(one, ball);
    bool trace_ok = std::abs(tc_cube.fitted_c - 6.0) < 1e-6 &&
                    std::abs(tc_ball.fitted_c - 3.0) < 1e-6;

    std::mt19937_64 rng(ctx.seed + 1);
    auto small_grid = PeriodicGrid::make(3, 16, grid->half_length());
    QuadDomain ball_lo = QuadDomain::ball({0, 0, 0}, 1.0, 24, 48, 12);
    QuadDomain ball_hi = QuadDomain::ball({0, 0, 0}, 1.0, 48, 96, 24);
    double cmax_lo = 0.0, cmax_hi = 0.0;
    for (int i = 0; i < 50; ++i) {
        ScalarField f = random_bandlimited(small_grid, 3, rng);
        SpectralInterpolator interp(f, 1e-14);
        auto ev = interp.as_eval();
        cmax_lo = std::max(cmax_lo, trace_check(ev, ball_lo).fitted_c);
        cmax_hi = std::max(cmax_hi, trace_check(ev, ball_hi).fitted_c);
    }
    bool ensemble_ok = std::abs(cmax_hi - cmax_lo) <= 0.1 * std::max(cmax_hi, cmax_lo);

    json out = {{"interior_ratios", ratios},
                {"min_interior_ratio", min_ratio},
                {"sphere_report", json::parse(rep.to_json())},
                {"trace_cube", {{"lhs", tc_cube.lhs}, {"bracket", tc_cube.bracket}, {"fitted_c", tc_cube.fitted_c}}},
                {"trace_ball", {{"lhs", tc_ball.lhs}, {"bracket", tc_ball.bracket}, {"fitted_c", tc_ball.fitted_c}}},
                {"trace_ensemble", {{"max_c_coarse", cmax_lo}, {"max_c_fine", cmax_hi}}}};
    write_text(ctx.out / "carleman.json", out.dump(2));
    r.pass = interior_ok && sphere_ok && trace_ok && ensemble_ok;
    if (!interior_ok) r.notes.push_back("interior ratio below 0.1");
    if (!sphere_ok) r.notes.push_back("sphere closed forms mismatch");
    if (!trace_ok) r.notes.push_back("trace closed forms mismatch");
    if (!ensemble_ok) r.notes.push_back("trace ensemble unstable under quadrature doubling");
    return r;
}

StageResult stage_dn(const StageContext& ctx) {
    StageResult r{"dn", false, 0.0, {}};
    auto grid = PeriodicGrid::make(3, ctx.cfg.grid.points_per_axis, ctx.cfg.grid.half_length);
    Conductivity g1 = synth_from_config(ctx.cfg.conductivity, grid);
    ConductivityConfig c2cfg = ctx.cfg.conductivity2.value_or(ConductivityConfig{
        "smooth_bump", 0.33, {0.08, 0.0, -0.05}, 0.6, 3.0});
    Conductivity g2 = synth_from_config(c2cfg, grid);
    FdDomain dom(grid, ctx.cfg.domain.box_cells, ctx.cfg.domain.eta, ctx.cfg.domain.epsilon);
    if (g1.support_radius >= -dom.box_lo())
        r.notes.push_back("warning: support ball not strictly inside the box");
    FdSolveOptions fd;
    fd.cg_tol = ctx.cfg.tolerances.cg_tol;
    Conductivity ones = wrap_field(
        ScalarField(grid, Representation::Physical, cplx(1.0, 0.0)), 0.1, {0, 0, 0},
        RegularityClass::SmoothBump);

    json out;
    bool ok = true;

    {  // linear exactness + flux
        RVec a{0.3, -0.7, 1.1};
        BoundaryData f = dom.trace([&](const std::array<double, 3>& x) {
            return cplx(a[0] * x[0] + a[1] * x[1] + a[2] * x[2], 0.0);
        });
        DnResult sol = solve_dirichlet(ones, dom, f, fd);
        double err = 0.0;
        const int nb = dom.cells_per_axis();
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
                for (int k = 0; k < nb; ++k) {
                    auto x = dom.cell_coord(i, j, k);
                    err = std::max(err, std::abs(sol.u[(std::size_t(i) * nb + j) * nb + k] -
                                                 cplx(a[0] * x[0] + a[1] * x[1] + a[2] * x[2], 0)));
                }
        double flux_err = 0.0;
        for (int ax = 0; ax < 3; ++ax)
            for (int side = 0; side < 2; ++side) {
                double expect = (side == 0 ? -1.0 : 1.0) * a[ax];
                for (const auto& v : sol.flux.at({ax, side}))
                    flux_err = std::max(flux_err, std::abs(v - cplx(expect, 0)));
            }
        out["linear_exactness"] = {{"solution_err", err}, {"flux_err", flux_err}};
        if (err > 1e-8 || flux_err > 1e-7) ok = false;
    }

    {  // maximum principle on random data
        std::mt19937_64 rng(ctx.seed + 2);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        double worst = 0.0;
        int trials = 100;
        for (int t = 0; t < trials; ++t) {
            BoundaryData f = dom.trace([&](const std::array<double, 3>&) {
                return cplx(uni(rng), 0.0);
            });
            double lo = 1e300, hi = -1e300;
            for (const auto& [k, v] : f)
                for (const auto& x : v) {
                    lo = std::min(lo, x.real());
                    hi = std::max(hi, x.real());
                }
            DnResult sol = solve_dirichlet(g1, dom, f, fd);
            for (const auto& u : sol.u) {
                worst = std::max(worst, lo - u.real());
                worst = std::max(worst, u.real() - hi);
            }
        }
        out["max_principle_excess"] = worst;
        if (worst > 1e-9) ok = false;
    }

    {  // symmetry, linearity, conservation, gamma-scaling
        BoundaryData f = dom.trace([](const std::array<double, 3>& x) {
            return cplx(std::cos(x[0]) * std::sin(1.3 * x[1]) + 0.5 * x[2], 0.0);
        });
        BoundaryData gdat = dom.trace([](const std::array<double, 3>& x) {
            return cplx(std::sin(0.9 * x[0] + 0.3) + 0.4 * x[1] * x[2], 0.0);
        });
        DnResult sf = solve_dirichlet(g1, dom, f, fd);
        DnResult sg = solve_dirichlet(g1, dom, gdat, fd);
        cplx p_fg = dn_pairing(sf, gdat, dom), p_gf = dn_pairing(sg, f, dom);
        double sym = std::abs(p_fg - p_gf) / std::max(std::abs(p_fg), 1e-30);
        out["symmetry_defect"] = sym;
        out["conservation_defect"] = std::max(sf.conservation_defect, sg.conservation_defect);
        if (sym > 1e-6) ok = false;
        if (out["conservation_defect"].get<double>() > 1e-8) ok = false;

        // linearity of the flux map
        cplx alpha(0.7, 0.0), beta(-1.3, 0.0);
        BoundaryData combo;
        for (const auto& [k, v] : f) {
            FaceData d(v.size());
            const auto& gv = gdat.at(k);
            for (std::size_t i = 0; i < v.size(); ++i) d[i] = alpha * v[i] + beta * gv[i];
            combo[k] = std::move(d);
        }
        DnResult sc = solve_dirichlet(g1, dom, combo, fd);
        double lin = 0.0, scale = 0.0;
        for (const auto& [k, v] : sc.flux) {
            const auto& vf = sf.flux.at(k);
            const auto& vg = sg.flux.at(k);
            for (std::size_t i = 0; i < v.size(); ++i) {
                lin = std::max(lin, std::abs(v[i] - alpha * vf[i] - beta * vg[i]));
                scale = std::max(scale, std::abs(v[i]));
            }
        }
        out["linearity_defect"] = lin / std::max(scale, 1e-30);
        if (lin / std::max(scale, 1e-30) > 1e-9) ok = false;

        // gamma -> 2 gamma doubles the flux
        ScalarField doubled = g1.gamma;
        for (auto& v : doubled.values()) v *= 2.0;
        Conductivity g1x2 =
            wrap_field(std::move(doubled), g1.support_radius, g1.center, g1.regularity_class);
        // gamma=2 outside the ball: fine for the scaling check
        DnResult s2 = solve_dirichlet(g1x2, dom, f, fd);
        double sc_err = 0.0;
        for (const auto& [k, v] : s2.flux) {
            const auto& vf = sf.flux.at(k);
            for (std::size_t i = 0; i < v.size(); ++i)
                sc_err = std::max(sc_err, std::abs(v[i] - 2.0 * vf[i]));
        }
        out["gamma_scaling_defect"] = sc_err;
        if (sc_err > 1e-7) ok = false;
    }

    {  // boundary identity: trivial pair and refinement order
        BoundaryData f1 = dom.trace([](const std::array<double, 3>& x) {
            return cplx(0.8 * x[0] - 0.2 * x[1], 0.0);
        });
        BoundaryData f2 = dom.trace([](const std::array<double, 3>& x) {
            return cplx(std::cos(x[0]) * std::sin(x[1]) + 0.3 * x[2], 0.0);
        });
        Prop51Result trivial = prop51_residual(g1, g1, dom, f1, f2, fd);
        out["prop51_trivial"] = {{"lhs", trivial.lhs}, {"rhs", trivial.rhs},
                                 {"residual", trivial.residual}};
        if (trivial.residual > 1e-10) ok = false;

        Prop51Result fine = prop51_residual(g1, g2, dom, f1, f2, fd);
        // same physical box at half the resolution
        auto grid_c = PeriodicGrid::make(3, grid->points_per_axis() / 2, grid->half_length());
        Conductivity g1c = synth_from_config(ctx.cfg.conductivity, grid_c);
        Conductivity g2c = synth_from_config(c2cfg, grid_c);
        FdDomain dom_c(grid_c, ctx.cfg.domain.box_cells / 2, ctx.cfg.domain.eta,
                       ctx.cfg.domain.epsilon);
        BoundaryData f1c = dom_c.trace([](const std::array<double, 3>& x) {
            return cplx(0.8 * x[0] - 0.2 * x[1], 0.0);
        });
        BoundaryData f2c = dom_c.trace([](const std::array<double, 3>& x) {
            return cplx(std::cos(x[0]) * std::sin(x[1]) + 0.3 * x[2], 0.0);
        });
        Prop51Result coarse = prop51_residual(g1c, g2c, dom_c, f1c, f2c, fd);
        double order = std::log2(coarse.residual / std::max(fine.residual, 1e-300));
        out["prop51_distinct"] = {{"residual_coarse", coarse.residual},
                                  {"residual_fine", fine.residual},
                                  {"observed_order", order}};
        if (!(order >= 1.0)) ok = false;
    }

    write_text(ctx.out / "dn.json", out.dump(2));
    r.pass = ok;
    return r;
}

StageResult stage_decay(const StageContext& ctx) {
    StageResult r{"decay", false, 0.0, {}};
    auto grid = PeriodicGrid::make(3, ctx.cfg.decay.points_per_axis, ctx.cfg.grid.half_length);
    Conductivity g1 =
        synth_smooth(ctx.cfg.decay.base_amplitude, {0, 0, 0}, ctx.cfg.decay.base_radius, grid);
    FdDomain dom(grid, ctx.cfg.decay.box_cells, ctx.cfg.domain.eta, ctx.cfg.domain.epsilon);
    Conductivity g2 = boundary_matched_partner(g1, dom, ctx.cfg.decay.wall_amplitude);
    MollifierKernel kernel(3);
    // k orthogonal to eta
    RVec eta = ctx.cfg.domain.eta;
    RVec helper = (std::abs(eta[0]) < 0.9) ? RVec{1, 0, 0} : RVec{0, 1, 0};
    RVec kdir{eta[1] * helper[2] - eta[2] * helper[1], eta[2] * helper[0] - eta[0] * helper[2],
              eta[0] * helper[1] - eta[1] * helper[0]};
    double kn = std::sqrt(kdir[0] * kdir[0] + kdir[1] * kdir[1] + kdir[2] * kdir[2]);
    RVec k{ctx.cfg.decay.k_magnitude * kdir[0] / kn, ctx.cfg.decay.k_magnitude * kdir[1] / kn,
           ctx.cfg.decay.k_magnitude * kdir[2] / kn};
    CgoSolveOptions copts;
    copts.tol = ctx.cfg.tolerances.cgo_tol;
    copts.max_iter = ctx.cfg.tolerances.cgo_max_iter;
    copts.floor_eps = ctx.cfg.tolerances.floor_eps;
    FdSolveOptions fd;
    fd.cg_tol = ctx.cfg.tolerances.cg_tol;

    DecaySweepResult distinct =
        boundary_decay_sweep(g1, g2, kernel, k, ctx.cfg.decay.s_values, dom, copts, fd);
    DecaySweepResult control =
        boundary_decay_sweep(g1, g1, kernel, k, ctx.cfg.decay.s_values, dom, copts, fd);
    write_text(ctx.out / "decay.csv", distinct.to_csv());
    write_text(ctx.out / "decay.json", distinct.to_json());
    write_text(ctx.out / "decay_control.json", control.to_json());

    bool control_zero = true;
    for (const auto& row : control.rows)
        if (row.failed || row.delta_u_sq != 0.0 || row.grad_delta_u_sq != 0.0 ||
            row.dnu_u_sq != 0.0)
            control_zero = false;
    r.pass = distinct.all_pass() && control_zero;
    if (!distinct.all_pass()) r.notes.push_back("distinct-pair trend verdict FAIL");
    if (!control_zero) r.notes.push_back("control pair not exactly zero");
    return r;
}

StageResult stage_unique(const StageContext& ctx) {
    StageResult r{"unique", false, 0.0, {}};
    auto grid = PeriodicGrid::make(3, ctx.cfg.grid.points_per_axis, ctx.cfg.grid.half_length);
    Conductivity g1 = synth_from_config(ctx.cfg.conductivity, grid);
    ConductivityConfig c2cfg = ctx.cfg.conductivity2.value_or(ConductivityConfig{
        "smooth_bump", 0.33, {0.08, 0.0, -0.05}, 0.6, 3.0});
    Conductivity g2 = synth_from_config(c2cfg, grid);
    RVec k = ctx.cfg.sweep.k;
    MollifierKernel kernel(3);
    bool ok = true;
    json out;

    ProductIdentity pid = product_identity(g1, g2, k);
    double scale = std::max(std::abs(pid.lhs), 1.0);
    out["product_identity"] = {{"lhs", {pid.lhs.real(), pid.lhs.imag()}},
                               {"rhs", {pid.rhs.real(), pid.rhs.imag()}},
                               {"gap", pid.gap},
                               {"rhs_qform", {pid.rhs_qform.real(), pid.rhs_qform.imag()}},
                               {"gap_qform", std::abs(pid.lhs - pid.rhs_qform)}};
    if (pid.gap > 1e-8 * scale) ok = false;

    {  // refinement of the identity gap
        auto fine = PeriodicGrid::make(3, grid->points_per_axis() * 2, grid->half_length());
        Conductivity g1f = synth_from_config(ctx.cfg.conductivity, fine);
        Conductivity g2f = synth_from_config(c2cfg, fine);
        ProductIdentity pf = product_identity(g1f, g2f, k);
        double ratio = pf.gap / std::max(pid.gap, 1e-300);
        out["refinement"] = {{"gap_fine", pf.gap}, {"ratio", ratio}};
        if (!(ratio <= 0.25)) ok = false;
    }

    {  // q-hat relation: single integration by parts is lattice-exact
        ScalarField q = q_distribution(g1, g2);
        cplx lhs = fourier_pairing(q, k);
        LogData l1 = log_data(g1), l2 = log_data(g2);
        ScalarField m = l1.phi - l2.phi;
        VectorField gm = gradient(m);
        ScalarField integrand(grid, Representation::Physical);
        for (std::size_t i = 0; i < integrand.values().size(); ++i) {
            cplx ik_dot = 0.0;
            for (int j = 0; j < 3; ++j)
                ik_dot += cplx(0.0, 0.5 * k[j]) * gm.comp[j].to_physical()[i];
            cplx d = 0.0;
            for (int j = 0; j < 3; ++j) {
                cplx a1 = l1.a_field.comp[j].to_physical()[i];
                cplx a2 = l2.a_field.comp[j].to_physical()[i];
                d += a1 * a1 - a2 * a2;
            }
            integrand[i] = -ik_dot + 0.25 * d;
        }
        cplx rhs = fourier_pairing(integrand, k);
        double qgap = std::abs(lhs - rhs);
        out["qhat_relation_gap"] = qgap;
        double qscale = std::max(std::abs(lhs), 1.0);
        if (qgap > 1e-8 * qscale) ok = false;
    }

    {  // cone checks: control pair exactly zero, distinct pair visible
        ConeReport control = cone_vanishing_check(g1, g1, ctx.cfg.domain.eta, 0.5, 512);
        ConeReport distinct = cone_vanishing_check(g1, g2, ctx.cfg.domain.eta, 0.5, 512);
        out["cone_control_max"] = control.max_in_cone;
        out["cone_distinct"] = {{"max", distinct.max_in_cone}, {"scale", distinct.scale}};
        if (control.max_in_cone != 0.0) ok = false;
        if (!(distinct.max_in_cone > 1e-3 * distinct.scale)) ok = false;
    }

    {  // finite-s diagnostic sequence for the full limit identity
        LogData l1 = log_data(g1), l2 = log_data(g2);
        CgoSolveOptions copts;
        copts.tol = ctx.cfg.tolerances.cgo_tol;
        copts.max_iter = ctx.cfg.tolerances.cgo_max_iter;
        copts.floor_eps = ctx.cfg.tolerances.floor_eps;
        copts.with_norm_record = false;
        auto dirs = admissible_directions(k, 1);
        double h = grid->spacing();
        ScalarField cutoff = make_ball_cutoff(
            grid, {0, 0, 0}, std::max(g1.support_radius, g2.support_radius) + 2 * h,
            std::min(0.92 * grid->half_length(),
                     std::max(g1.support_radius, g2.support_radius) + 0.4));
        ScalarField p1(grid, Representation::Physical, g1.gamma.values());
        ScalarField p2(grid, Representation::Physical, g2.gamma.values());
        for (auto& v : p1.values()) v = std::sqrt(v.real());
        for (auto& v : p2.values()) v = std::sqrt(v.real());
        VectorField gp1 = gradient(p1), gp2 = gradient(p2);
        json seq = json::array();
        double prev_gap = -1.0;
        bool decreasing = true;
        for (double s : ctx.cfg.sweep.s_values) {
            CgoParameters params = make_zeta_pair(k, s, dirs[0].first, dirs[0].second);
            CgoSolution w1 = solve_w(l1, kernel, params.zeta1, copts);
            CgoSolution w2 = solve_w(l2, kernel, params.zeta2, copts);
            if (w1.status != CgoStatus::Converged || w2.status != CgoStatus::Converged) {
                seq.push_back({{"s", s}, {"failed", true}});
                continue;
            }
            ScalarField p1s = mollify(l1.phi, w1.t_scale, kernel).to_physical();
            ScalarField p2s = mollify(l2.phi, w2.t_scale, kernel).to_physical();
            // u1 u2 = e^{-(phi_1s + phi_2s)/2} e^{ixk} (1+w1)(1+w2): bounded product
            ScalarField prod(grid, Representation::Physical);
            ScalarField w1p = w1.w.to_physical(), w2p = w2.w.to_physical();
            for_each_point(*grid, [&](std::size_t i, const std::array<double, 3>& x) {
                double xk = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                prod[i] = std::exp(-0.5 * (p1s[i].real() + p2s[i].real())) *
                          std::polar(1.0, xk) * (1.0 + w1p[i]) * (1.0 + w2p[i]);
            });
            VectorField gprod = gradient(prod);
            cplx ps = 0.0;
            for (int ax = 0; ax < 3; ++ax) {
                ScalarField ga = gp1.comp[ax].to_physical();
                ScalarField gb = gp2.comp[ax].to_physical();
                ScalarField gc = gprod.comp[ax].to_physical();
                for (std::size_t i = 0; i < ga.values().size(); ++i)
                    ps += (p1[i] * gb[i] - p2[i] * ga[i]) * gc[i];
            }
            ps *= grid->cell_volume();
            double gap_s = std::abs(ps - pid.lhs);
            ScalarField cw1 = pointwise_multiply(cutoff, w1.w);
            ScalarField cw2 = pointwise_multiply(cutoff, w2.w);
            double g1n = 0.0, g2n = 0.0;
            for (const auto& cmp : gradient(cw1).comp) g1n += l2_norm(cmp) * l2_norm(cmp);
            for (const auto& cmp : gradient(cw2).comp) g2n += l2_norm(cmp) * l2_norm(cmp);
            seq.push_back({{"s", s},
                           {"finite_s_integral", {ps.real(), ps.imag()}},
                           {"gap_to_limit", gap_s},
                           {"phiB_w1_l2", l2_norm(cw1)},
                           {"phiB_w2_l2", l2_norm(cw2)},
                           {"phiB_w1_hhalf", sobolev_norm(cw1, 0.5)},
                           {"phiB_w2_hhalf", sobolev_norm(cw2, 0.5)},
                           {"grad_phiB_w1_l2", std::sqrt(g1n)},
                           {"grad_phiB_w2_l2", std::sqrt(g2n)}});
            if (prev_gap >= 0.0 && gap_s > prev_gap) decreasing = false;
            prev_gap = gap_s;
        }
        out["finite_s"] = seq;
        out["finite_s_gap_decreasing"] = decreasing;
    }

    {  // end-to-end null test: identical pair -> exact zeros everywhere
        ProductIdentity null_pid = product_identity(g1, g1, k);
        ScalarField qnull = q_distribution(g1, g1);
        double qsup = sup_norm(qnull);
        ConeReport cone = cone_vanishing_check(g1, g1, ctx.cfg.domain.eta, 0.5, 256);
        LogData l1 = log_data(g1);
        double logdiff = sup_norm(l1.phi - l1.phi);
        out["null_test"] = {{"product_gap", null_pid.gap},
                            {"q_sup", qsup},
                            {"cone_max", cone.max_in_cone},
                            {"log_gamma_diff", logdiff}};
        double s1 = std::max(std::abs(null_pid.lhs), 1.0);
        if (null_pid.gap > 1e-10 * s1 || qsup > 1e-10 || cone.max_in_cone > 1e-10 ||
            logdiff > 1e-10)
            ok = false;
    }

    write_text(ctx.out / "unique.json", out.dump(2));
    r.pass = ok;
    return r;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config, const std::string& stage,
                         const std::string& out_dir, std::uint64_t seed, int threads) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    StageContext ctx{config, fs::path(out_dir), seed};

    std::vector<std::pair<std::string, StageResult (*)(const StageContext&)>> all = {
        {"rates", stage_rates},   {"cgo", stage_cgo},         {"localize", stage_localize},
        {"carleman", stage_carleman}, {"dn", stage_dn},       {"decay", stage_decay},
        {"unique", stage_unique}};

    std::vector<std::pair<std::string, StageResult (*)(const StageContext&)>> todo;
    if (stage == "all") {
        todo = all;
    } else {
        for (const auto& s : all)
            if (s.first == stage) todo.push_back(s);
        if (todo.empty()) throw std::invalid_argument("unknown experiment stage: " + stage);
    }

    auto timed = [&](const std::pair<std::string, StageResult (*)(const StageContext&)>& item) {
        auto start = std::chrono::steady_clock::now();
        StageResult res;
        try {
            res = item.second(ctx);
        } catch (const std::exception& e) {
            res.name = item.first;
            res.pass = false;
            res.notes.push_back(std::string("exception: ") + e.what());
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return res;
    };

    RunReport report;
    if (threads > 1 && todo.size() > 1) {
        std::vector<std::future<StageResult>> futures;
        for (const auto& item : todo)
            futures.push_back(std::async(std::launch::async, timed, item));
        for (auto& f : futures) report.stages.push_back(f.get());
    } else {
        for (const auto& item : todo) report.stages.push_back(timed(item));
    }

    json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = seed;
    manifest["threads"] = threads;
    {
        std::ostringstream hex;
        hex << std::hex << config_hash(config);
        manifest["config_hash"] = hex.str();
    }
    manifest["stages"] = json::array();
    for (const auto& s : report.stages)
        manifest["stages"].push_back(
            {{"name", s.name}, {"pass", s.pass}, {"seconds", s.seconds}, {"notes", s.notes}});
    manifest["all_pass"] = report.all_pass();
    write_text(fs::path(out_dir) / "manifest.json", manifest.dump(2));
    write_text(fs::path(out_dir) / "config.json", config_to_json(config));
    return report;
}

}  // namespace calderon

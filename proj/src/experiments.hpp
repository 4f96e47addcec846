// End-to-end experiment runner: the Fourier-inversion identity, the vanishing
// distribution q, cone sampling, and the config-driven stage dispatcher that
// writes CSV/JSON reports plus a manifest.
#pragma once

#include <cstdint>
#include <optional>

#include "carleman.hpp"
#include "dn.hpp"

namespace calderon {

// q = (1/2) Lap(log g1 - log g2) + (1/4)((grad log g1)^2 - (grad log g2)^2)
ScalarField q_distribution(const Conductivity& g1, const Conductivity& g2);

struct ProductIdentity {
    cplx lhs;  // int (sqrt(g1) grad sqrt(g2) - sqrt(g2) grad sqrt(g1)) . grad(sqrt(g1 g2) e^{ixk})
    cplx rhs;  // same integral after one integration by parts: int e^{ixk} pq (q Lap p - p Lap q)
    double gap;
    cplx rhs_qform;  // int e^{ixk} g1 g2 q dx at data resolution (diagnostic route)
};

// both sides are evaluated with 2x-oversampled nonlinearities and quadrature so
// the gap measures the identity, not product aliasing; k must lie on the lattice
ProductIdentity product_identity(const Conductivity& g1, const Conductivity& g2, const RVec& k);

// int e^{ix.k} f dx over the torus
cplx fourier_pairing(const ScalarField& f, const RVec& k);

struct ConeSample {
    RVec k;
    double magnitude;  // |q_hat(k)|
};

struct ConeReport {
    double max_in_cone = 0.0;
    RVec argmax{0, 0, 0};
    double scale = 0.0;  // sup over the whole lattice of |q_hat|
    std::size_t samples = 0;
    std::vector<ConeSample> worst;  // a few largest samples
};

// samples |q_hat| at nonzero lattice frequencies within the cone
// {k : |k.eta| <= sin(half_angle) |k|}, ordered by |k|, up to n_samples
ConeReport cone_vanishing_check(const Conductivity& g1, const Conductivity& g2, const RVec& eta,
                                double cone_half_angle, std::size_t n_samples);

// ---------------- config ----------------

struct GridConfig {
    int dim = 3;
    int points_per_axis = 64;
    double half_length = M_PI / 2.0;
};

struct ConductivityConfig {
    std::string family = "smooth_bump";  // or "cone_profile"
    double amplitude = 0.3;
    RVec center{0.0, 0.0, 0.0};
    double radius = 0.7;
    double exponent = 3.0;  // cone exponent
};

struct MollifierConfig {
    std::vector<double> t_values{4, 8, 16, 32};
};

struct SweepConfig {
    std::vector<double> s_values{8, 16, 32, 64};
    RVec k{0.0, 0.0, 2.0};
    int direction_count = 3;
    int localization_fields = 10;
    int localization_band = 8;
};

struct DomainConfig {
    int box_cells = 48;
    RVec eta{0.0, 0.0, 1.0};
    double epsilon = 0.5;
    int quad_theta = 48;
    int quad_phi = 96;
    int quad_r = 24;
};

struct DecayConfig {
    int points_per_axis = 192;
    int box_cells = 84;
    double base_amplitude = 0.2;
    double base_radius = 0.75;
    double wall_amplitude = 0.1;
    std::vector<double> s_values{8, 16, 32};
    double k_magnitude = 2.0;
};

struct ToleranceConfig {
    double cgo_tol = 1e-8;
    int cgo_max_iter = 150;
    double floor_eps = 1e-3;
    double cg_tol = 1e-12;
    std::vector<double> carleman_t{5, 10, 20, 40};
};

struct ExperimentConfig {
    GridConfig grid;
    ConductivityConfig conductivity;
    std::optional<ConductivityConfig> conductivity2;
    MollifierConfig mollifier;
    SweepConfig sweep;
    DomainConfig domain;
    DecayConfig decay;
    ToleranceConfig tolerances;
};

// throws std::invalid_argument with field-level messages
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& c);
std::uint64_t config_hash(const ExperimentConfig& c);

Conductivity synth_from_config(const ConductivityConfig& c, GridPtr grid);

// ---------------- runner ----------------

struct StageResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::vector<std::string> notes;
};

struct RunReport {
    std::vector<StageResult> stages;
    bool all_pass() const {
        for (const auto& s : stages)
            if (!s.pass) return false;
        return !stages.empty();
    }
};

// stage in {rates, cgo, localize, carleman, dn, decay, unique, all}
RunReport run_experiment(const ExperimentConfig& config, const std::string& stage,
                         const std::string& out_dir, std::uint64_t seed, int threads);

extern const char* kVersion;

}  // namespace calderon

// Discretized torus [-L, L)^dim with its dual frequency lattice, spectral
// transforms, derivatives and the Lebesgue/Sobolev norms used everywhere else.
//
// Coefficient convention: to_spectral of a constant field c is a delta at
// frequency zero with value c, i.e. f(x) = sum_m fhat(xi_m) e^{i xi_m . x}
// with xi_m = (pi/L) m, m_j in [-n/2, n/2).
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace calderon {

using cplx = std::complex<double>;

class PeriodicGrid;
using GridPtr = std::shared_ptr<const PeriodicGrid>;

class PeriodicGrid {
public:
    // dim in {2,3}; points_per_axis even and >= 8; half_length > 0
    static GridPtr make(int dim, int points_per_axis, double half_length);
    ~PeriodicGrid();
    PeriodicGrid(const PeriodicGrid&) = delete;
    PeriodicGrid& operator=(const PeriodicGrid&) = delete;

    int dim() const { return dim_; }
    int points_per_axis() const { return n_; }
    double half_length() const { return half_length_; }
    double spacing() const { return h_; }
    std::size_t size() const { return size_; }
    double volume() const { return volume_; }
    double cell_volume() const { return cell_volume_; }

    // per-axis tables indexed by the fft-ordered axis index
    const std::vector<double>& coords() const { return coords_; }
    const std::vector<double>& freqs() const { return freqs_; }
    // frequencies used by spectral derivatives: Nyquist mode zeroed
    const std::vector<double>& deriv_freqs() const { return deriv_freqs_; }
    double max_axis_freq() const { return (M_PI / half_length_) * (n_ / 2); }

    std::array<int, 3> axis_index(std::size_t flat) const {
        if (dim_ == 3) {
            int i2 = static_cast<int>(flat % n_);
            int i1 = static_cast<int>((flat / n_) % n_);
            int i0 = static_cast<int>(flat / (std::size_t(n_) * n_));
            return {i0, i1, i2};
        }
        return {static_cast<int>(flat / n_), static_cast<int>(flat % n_), 0};
    }
    std::size_t flat_index(int i0, int i1, int i2 = 0) const {
        if (dim_ == 3) return (std::size_t(i0) * n_ + i1) * n_ + i2;
        return std::size_t(i0) * n_ + i1;
    }

    // in-place transforms including normalization and the centered-coordinate
    // phase so that spectral values are the coefficients of e^{i xi . x}
    void forward(std::vector<cplx>& v) const;
    void backward(std::vector<cplx>& v) const;

    bool same_as(const PeriodicGrid& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && half_length_ == o.half_length_;
    }

private:
    PeriodicGrid(int dim, int n, double half_length);
    void apply_phase_scale(std::vector<cplx>& v, double scale) const;

    int dim_, n_;
    double half_length_, h_, volume_, cell_volume_;
    std::size_t size_;
    std::vector<double> coords_, freqs_, deriv_freqs_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

enum class Representation { Physical, Spectral };

class ScalarField {
public:
    ScalarField() = default;
    ScalarField(GridPtr grid, Representation rep, cplx fill = cplx(0.0, 0.0));
    ScalarField(GridPtr grid, Representation rep, std::vector<cplx> values);

    static ScalarField from_function(GridPtr grid,
                                     const std::function<cplx(const std::array<double, 3>&)>& f);

    const PeriodicGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    Representation representation() const { return rep_; }
    bool empty() const { return !grid_; }

    std::vector<cplx>& values() { return v_; }
    const std::vector<cplx>& values() const { return v_; }
    cplx& operator[](std::size_t i) { return v_[i]; }
    const cplx& operator[](std::size_t i) const { return v_[i]; }

    ScalarField to_spectral() const;
    ScalarField to_physical() const;

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(cplx c);

private:
    GridPtr grid_;
    std::vector<cplx> v_;
    Representation rep_ = Representation::Physical;
};

struct VectorField {
    std::vector<ScalarField> comp;  // dim components
    const PeriodicGrid& grid() const { return comp.at(0).grid(); }
    int dim() const { return static_cast<int>(comp.size()); }
};

// --- arithmetic (physical-representation pointwise ops) ---
ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, cplx c);
ScalarField pointwise_multiply(const ScalarField& a, const ScalarField& b);

// --- calculus ---
VectorField gradient(const ScalarField& f);
ScalarField derivative(const ScalarField& f, int axis);
ScalarField second_derivative(const ScalarField& f, int axis_a, int axis_b);
ScalarField laplacian(const ScalarField& f);
ScalarField divergence(const VectorField& a);
// multiplier(xi) applied in the spectral domain; returns a field in the input representation
ScalarField apply_multiplier(const ScalarField& f,
                             const std::function<cplx(const std::array<double, 3>&)>& m);

// --- norms ---
double sup_norm(const ScalarField& f);
double l2_norm(const ScalarField& f);
double sobolev_norm(const ScalarField& f, double order, bool homogeneous = false);
double sup_norm(const VectorField& a);  // pointwise euclidean magnitude, then sup

// Frobenius norms of the full Hessian: {L2, sup}
std::pair<double, double> hessian_norms(const ScalarField& f);

// sup of |f| restricted to |x - center| > radius (physical rep)
double sup_norm_outside_ball(const ScalarField& f, const std::array<double, 3>& center, double radius);
double l2_norm_inside_ball(const ScalarField& f, const std::array<double, 3>& center, double radius);

// zero-padded spectral refinement onto a grid with factor x points per axis
ScalarField spectral_upsample(const ScalarField& f, int factor);

// --- serialization ---
void save_field(const std::string& path, const ScalarField& f);
ScalarField load_field(const std::string& path);
std::string field_to_json(const ScalarField& f, std::size_t max_points = 4096);

// iteration helper: fn(flat, xi) over the frequency lattice
template <class F>
void for_each_freq(const PeriodicGrid& g, F&& fn) {
    const auto& xi = g.freqs();
    const int n = g.points_per_axis();
    std::size_t flat = 0;
    if (g.dim() == 3) {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2, ++flat)
                    fn(flat, std::array<double, 3>{xi[i0], xi[i1], xi[i2]});
    } else {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1, ++flat)
                fn(flat, std::array<double, 3>{xi[i0], xi[i1], 0.0});
    }
}

template <class F>
void for_each_point(const PeriodicGrid& g, F&& fn) {
    const auto& x = g.coords();
    const int n = g.points_per_axis();
    std::size_t flat = 0;
    if (g.dim() == 3) {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2, ++flat)
                    fn(flat, std::array<double, 3>{x[i0], x[i1], x[i2]});
    } else {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1, ++flat)
                fn(flat, std::array<double, 3>{x[i0], x[i1], 0.0});
    }
}

}  // namespace calderon

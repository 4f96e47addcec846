#include "grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace calderon {

namespace {
std::mutex planner_mutex;  // FFTW planning is not thread-safe; execution is
}

struct PeriodicGrid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans() {
        std::lock_guard<std::mutex> lk(planner_mutex);
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

PeriodicGrid::PeriodicGrid(int dim, int n, double half_length)
    : dim_(dim), n_(n), half_length_(half_length) {
    h_ = 2.0 * half_length_ / n_;
    size_ = 1;
    for (int d = 0; d < dim_; ++d) size_ *= n_;
    volume_ = std::pow(2.0 * half_length_, dim_);
    cell_volume_ = std::pow(h_, dim_);
    coords_.resize(n_);
    freqs_.resize(n_);
    deriv_freqs_.resize(n_);
    const double base = M_PI / half_length_;
    for (int i = 0; i < n_; ++i) {
        coords_[i] = -half_length_ + i * h_;
        int m = (i < n_ / 2) ? i : i - n_;
        freqs_[i] = base * m;
        deriv_freqs_[i] = (m == -n_ / 2) ? 0.0 : base * m;  // unpaired Nyquist dropped
    }
    plans_ = std::make_unique<Plans>();
    std::vector<cplx> scratch(size_);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard<std::mutex> lk(planner_mutex);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (dim_ == 3)
        plans_->fwd = fftw_plan_dft_3d(n_, n_, n_, p, p, FFTW_FORWARD, flags);
    else
        plans_->fwd = fftw_plan_dft_2d(n_, n_, p, p, FFTW_FORWARD, flags);
    if (dim_ == 3)
        plans_->bwd = fftw_plan_dft_3d(n_, n_, n_, p, p, FFTW_BACKWARD, flags);
    else
        plans_->bwd = fftw_plan_dft_2d(n_, n_, p, p, FFTW_BACKWARD, flags);
    if (!plans_->fwd || !plans_->bwd) throw std::runtime_error("fftw plan creation failed");
}

PeriodicGrid::~PeriodicGrid() = default;

GridPtr PeriodicGrid::make(int dim, int points_per_axis, double half_length) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("grid dim must be 2 or 3");
    if (points_per_axis < 8 || points_per_axis % 2 != 0)
        throw std::invalid_argument("points_per_axis must be even and >= 8");
    if (!(half_length > 0.0)) throw std::invalid_argument("half_length must be positive");
    return GridPtr(new PeriodicGrid(dim, points_per_axis, half_length));
}

void PeriodicGrid::apply_phase_scale(std::vector<cplx>& v, double scale) const {
    // phase (-1)^{m0+m1+m2} relocates the origin to the torus center; parity of
    // the axis index equals parity of the mode for even n
    const int n = n_;
    std::size_t flat = 0;
    if (dim_ == 3) {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2, ++flat) {
                    double s = ((i0 + i1 + i2) & 1) ? -scale : scale;
                    v[flat] *= s;
                }
    } else {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1, ++flat) {
                double s = ((i0 + i1) & 1) ? -scale : scale;
                v[flat] *= s;
            }
    }
}

void PeriodicGrid::forward(std::vector<cplx>& v) const {
    if (v.size() != size_) throw std::invalid_argument("field size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(plans_->fwd, p, p);
    apply_phase_scale(v, 1.0 / static_cast<double>(size_));
}

void PeriodicGrid::backward(std::vector<cplx>& v) const {
    if (v.size() != size_) throw std::invalid_argument("field size mismatch");
    apply_phase_scale(v, 1.0);
    auto* p = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(plans_->bwd, p, p);
}

ScalarField::ScalarField(GridPtr grid, Representation rep, cplx fill)
    : grid_(std::move(grid)), v_(grid_->size(), fill), rep_(rep) {}

ScalarField::ScalarField(GridPtr grid, Representation rep, std::vector<cplx> values)
    : grid_(std::move(grid)), v_(std::move(values)), rep_(rep) {
    if (v_.size() != grid_->size()) throw std::invalid_argument("field size mismatch");
}

ScalarField ScalarField::from_function(GridPtr grid,
                                       const std::function<cplx(const std::array<double, 3>&)>& f) {
    ScalarField out(grid, Representation::Physical);
    for_each_point(*grid, [&](std::size_t i, const std::array<double, 3>& x) { out[i] = f(x); });
    return out;
}

ScalarField ScalarField::to_spectral() const {
    if (rep_ == Representation::Spectral) return *this;
    ScalarField out(grid_, Representation::Spectral, v_);
    grid_->forward(out.values());
    return out;
}

ScalarField ScalarField::to_physical() const {
    if (rep_ == Representation::Physical) return *this;
    ScalarField out(grid_, Representation::Physical, v_);
    grid_->backward(out.values());
    return out;
}

static void check_compatible(const ScalarField& a, const ScalarField& b) {
    if (!a.grid().same_as(b.grid()) || a.representation() != b.representation())
        throw std::invalid_argument("field grid/representation mismatch");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    check_compatible(*this, o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
}
ScalarField& ScalarField::operator-=(const ScalarField& o) {
    check_compatible(*this, o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
}
ScalarField& ScalarField::operator*=(cplx c) {
    for (auto& x : v_) x *= c;
    return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { a += b; return a; }
ScalarField operator-(ScalarField a, const ScalarField& b) { a -= b; return a; }
ScalarField operator*(ScalarField a, cplx c) { a *= c; return a; }

ScalarField pointwise_multiply(const ScalarField& a, const ScalarField& b) {
    ScalarField pa = a.to_physical(), pb = b.to_physical();
    ScalarField out(pa.grid_ptr(), Representation::Physical, std::move(pa.values()));
    const auto& vb = pb.values();
    for (std::size_t i = 0; i < out.values().size(); ++i) out[i] *= vb[i];
    return out;
}

ScalarField derivative(const ScalarField& f, int axis) {
    if (axis < 0 || axis >= f.grid().dim()) throw std::invalid_argument("bad axis");
    ScalarField s = f.to_spectral();
    const auto& g = f.grid();
    const auto& w = g.deriv_freqs();
    const int n = g.points_per_axis();
    auto& v = s.values();
    std::size_t flat = 0;
    if (g.dim() == 3) {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2, ++flat) {
                    double xi = axis == 0 ? w[i0] : (axis == 1 ? w[i1] : w[i2]);
                    v[flat] *= cplx(0.0, xi);
                }
    } else {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1, ++flat) {
                double xi = axis == 0 ? w[i0] : w[i1];
                v[flat] *= cplx(0.0, xi);
            }
    }
    return (f.representation() == Representation::Physical) ? s.to_physical() : s;
}

VectorField gradient(const ScalarField& f) {
    VectorField out;
    for (int d = 0; d < f.grid().dim(); ++d) out.comp.push_back(derivative(f, d));
    return out;
}

ScalarField second_derivative(const ScalarField& f, int a, int b) {
    ScalarField s = f.to_spectral();
    const auto& g = f.grid();
    const auto& w = g.deriv_freqs();
    const int n = g.points_per_axis();
    auto& v = s.values();
    std::size_t flat = 0;
    auto pick = [&](int axis, int i0, int i1, int i2) {
        return axis == 0 ? w[i0] : (axis == 1 ? w[i1] : w[i2]);
    };
    if (g.dim() == 3) {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2, ++flat)
                    v[flat] *= -pick(a, i0, i1, i2) * pick(b, i0, i1, i2);
    } else {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1, ++flat)
                v[flat] *= -pick(a, i0, i1, 0) * pick(b, i0, i1, 0);
    }
    return (f.representation() == Representation::Physical) ? s.to_physical() : s;
}

ScalarField laplacian(const ScalarField& f) {
    ScalarField s = f.to_spectral();
    auto& v = s.values();
    for_each_freq(f.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        v[i] *= -(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    });
    return (f.representation() == Representation::Physical) ? s.to_physical() : s;
}

ScalarField divergence(const VectorField& a) {
    ScalarField out = derivative(a.comp.at(0), 0);
    for (int d = 1; d < a.dim(); ++d) out += derivative(a.comp[d], d);
    return out;
}

ScalarField apply_multiplier(const ScalarField& f,
                             const std::function<cplx(const std::array<double, 3>&)>& m) {
    ScalarField s = f.to_spectral();
    auto& v = s.values();
    for_each_freq(f.grid(), [&](std::size_t i, const std::array<double, 3>& xi) { v[i] *= m(xi); });
    return (f.representation() == Representation::Physical) ? s.to_physical() : s;
}

double sup_norm(const ScalarField& f) {
    ScalarField p = f.to_physical();
    double m = 0.0;
    for (const auto& x : p.values()) m = std::max(m, std::abs(x));
    return m;
}

double l2_norm(const ScalarField& f) {
    double s = 0.0;
    for (const auto& x : f.values()) s += std::norm(x);
    double w = (f.representation() == Representation::Physical) ? f.grid().cell_volume()
                                                                : f.grid().volume();
    return std::sqrt(s * w);
}

double sobolev_norm(const ScalarField& f, double order, bool homogeneous) {
    if (order < 0.0) throw std::invalid_argument("sobolev order must be >= 0");
    ScalarField s = f.to_spectral();
    double acc = 0.0;
    const auto& v = s.values();
    for_each_freq(f.grid(), [&](std::size_t i, const std::array<double, 3>& xi) {
        double xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        double w;
        if (order == 0.0)
            w = 1.0;
        else if (homogeneous)
            w = std::pow(xi2, order / 2.0);  // 0 at xi=0 for order>0
        else
            w = std::pow(1.0 + xi2, order / 2.0);
        acc += w * w * std::norm(v[i]);
    });
    return std::sqrt(acc * f.grid().volume());
}

double sup_norm(const VectorField& a) {
    std::vector<ScalarField> phys;
    for (const auto& c : a.comp) phys.push_back(c.to_physical());
    double m = 0.0;
    for (std::size_t i = 0; i < phys[0].values().size(); ++i) {
        double s = 0.0;
        for (const auto& c : phys) s += std::norm(c[i]);
        m = std::max(m, s);
    }
    return std::sqrt(m);
}

std::pair<double, double> hessian_norms(const ScalarField& f) {
    const int d = f.grid().dim();
    double l2sq = 0.0;
    std::vector<double> supsq(f.grid().size(), 0.0);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            ScalarField dd = second_derivative(f, a, b).to_physical();
            double n = l2_norm(dd);
            l2sq += n * n;
            for (std::size_t i = 0; i < supsq.size(); ++i) supsq[i] += std::norm(dd[i]);
        }
    double m = 0.0;
    for (double x : supsq) m = std::max(m, x);
    return {std::sqrt(l2sq), std::sqrt(m)};
}

double sup_norm_outside_ball(const ScalarField& f, const std::array<double, 3>& c, double radius) {
    ScalarField p = f.to_physical();
    double m = 0.0;
    double r2 = radius * radius;
    for_each_point(f.grid(), [&](std::size_t i, const std::array<double, 3>& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - c[k]) * (x[k] - c[k]);
        if (d2 > r2) m = std::max(m, std::abs(p[i]));
    });
    return m;
}

double l2_norm_inside_ball(const ScalarField& f, const std::array<double, 3>& c, double radius) {
    ScalarField p = f.to_physical();
    double acc = 0.0;
    double r2 = radius * radius;
    for_each_point(f.grid(), [&](std::size_t i, const std::array<double, 3>& x) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) d2 += (x[k] - c[k]) * (x[k] - c[k]);
        if (d2 <= r2) acc += std::norm(p[i]);
    });
    return std::sqrt(acc * f.grid().cell_volume());
}

ScalarField spectral_upsample(const ScalarField& f, int factor) {
    const auto& g = f.grid();
    const int n = g.points_per_axis();
    const int N = n * factor;
    auto gg = PeriodicGrid::make(g.dim(), N, g.half_length());
    ScalarField s = f.to_spectral();
    ScalarField big(gg, Representation::Spectral);
    auto map_index = [&](int i) {
        int m = (i < n / 2) ? i : i - n;
        return (m >= 0) ? m : N + m;
    };
    if (g.dim() == 3) {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2)
                    big[gg->flat_index(map_index(i0), map_index(i1), map_index(i2))] =
                        s[g.flat_index(i0, i1, i2)];
    } else {
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                big[gg->flat_index(map_index(i0), map_index(i1))] = s[g.flat_index(i0, i1)];
    }
    return big.to_physical();
}

// flat binary container: magic, version, dim, n, half_length, representation,
// then interleaved re/im doubles in row-major order
void save_field(const std::string& path, const ScalarField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    const char magic[4] = {'C', 'A', 'L', 'F'};
    os.write(magic, 4);
    std::uint32_t ver = 1, dim = f.grid().dim(), n = f.grid().points_per_axis();
    std::uint32_t rep = f.representation() == Representation::Physical ? 0 : 1;
    double L = f.grid().half_length();
    os.write(reinterpret_cast<const char*>(&ver), 4);
    os.write(reinterpret_cast<const char*>(&dim), 4);
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&L), 8);
    os.write(reinterpret_cast<const char*>(&rep), 4);
    os.write(reinterpret_cast<const char*>(f.values().data()),
             static_cast<std::streamsize>(f.values().size() * sizeof(cplx)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

ScalarField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "CALF", 4) != 0) throw std::runtime_error("bad field file magic");
    std::uint32_t ver, dim, n, rep;
    double L;
    is.read(reinterpret_cast<char*>(&ver), 4);
    is.read(reinterpret_cast<char*>(&dim), 4);
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&L), 8);
    is.read(reinterpret_cast<char*>(&rep), 4);
    if (ver != 1) throw std::runtime_error("unsupported field file version");
    auto g = PeriodicGrid::make(static_cast<int>(dim), static_cast<int>(n), L);
    std::vector<cplx> v(g->size());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(cplx)));
    if (!is) throw std::runtime_error("truncated field file: " + path);
    return ScalarField(g, rep == 0 ? Representation::Physical : Representation::Spectral, std::move(v));
}

std::string field_to_json(const ScalarField& f, std::size_t max_points) {
    if (f.grid().size() > max_points)
        throw std::invalid_argument("grid too large for json serialization");
    std::ostringstream os;
    os.precision(17);
    os << "{\"dim\":" << f.grid().dim() << ",\"points_per_axis\":" << f.grid().points_per_axis()
       << ",\"half_length\":" << f.grid().half_length() << ",\"representation\":\""
       << (f.representation() == Representation::Physical ? "physical" : "spectral")
       << "\",\"values\":[";
    for (std::size_t i = 0; i < f.values().size(); ++i) {
        if (i) os << ",";
        os << "[" << f[i].real() << "," << f[i].imag() << "]";
    }
    os << "]}";
    return os.str();
}

}  // namespace calderon

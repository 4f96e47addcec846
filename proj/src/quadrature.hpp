// Quadrature domains with boundary normals for the Carleman and trace checks:
// a ball (product Gauss-Legendre in angles, Gauss-Legendre radially) and an
// axis-aligned box (tensor Gauss-Legendre), plus evaluation of grid fields at
// off-lattice nodes by trigonometric interpolation.
#pragma once

#include <array>
#include <functional>

#include "grid.hpp"

namespace calderon {

struct QuadNode {
    std::array<double, 3> x;
    std::array<double, 3> normal;  // boundary nodes only
    double weight;
};

// value, gradient and laplacian of a (possibly analytic) field at a point
struct FieldEval {
    std::function<cplx(const std::array<double, 3>&)> value;
    std::function<std::array<cplx, 3>(const std::array<double, 3>&)> gradient;
    std::function<cplx(const std::array<double, 3>&)> laplacian;
};

class QuadDomain {
public:
    static QuadDomain ball(const std::array<double, 3>& center, double radius, int n_theta = 48,
                           int n_phi = 96, int n_r = 24);
    static QuadDomain box(const std::array<double, 3>& corner, const std::array<double, 3>& sides,
                          int n_face = 24, int n_interior = 24);

    const std::vector<QuadNode>& boundary() const { return boundary_; }
    const std::vector<QuadNode>& interior() const { return interior_; }
    double surface_area() const;
    double volume() const;
    double exact_surface_area() const { return exact_area_; }
    double exact_volume() const { return exact_volume_; }

    // max divergence-theorem defect over a small polynomial test family
    double divergence_selftest() const;
    void require_selftest(double tol = 1e-5) const;

    std::string shape() const { return shape_; }

private:
    std::vector<QuadNode> boundary_, interior_;
    double exact_area_ = 0.0, exact_volume_ = 0.0;
    std::string shape_;
};

// Gauss-Legendre nodes/weights on [-1, 1]
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// trigonometric interpolation of a grid field; modes with |coef| below
// drop_tol * max|coef| are skipped (band-limited fields evaluate fast)
class SpectralInterpolator {
public:
    explicit SpectralInterpolator(const ScalarField& f, double drop_tol = 0.0);
    cplx value(const std::array<double, 3>& x) const;
    std::array<cplx, 3> gradient(const std::array<double, 3>& x) const;
    cplx laplacian(const std::array<double, 3>& x) const;
    FieldEval as_eval() const;
    std::size_t mode_count() const { return modes_.size(); }

private:
    struct Mode {
        std::array<double, 3> xi;
        cplx coef;
    };
    std::vector<Mode> modes_;
    int dim_;
};

}  // namespace calderon

#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "hitchin/types.hpp"

namespace hitchin {

/// Square grid [-R, R]^2 inside the Poincare disk, carrying the density
/// g0(z) = 2 / (1 - |z|^2)^2 of the curvature -1 metric g0 = 2 g0 (dx^2 + dy^2).
///
/// Nodes are row-major: node k = i * N + j sits at z = (-R + j h) + i(-R + i h).
/// Copies share the immutable node tables.
class HyperbolicPatch {
public:
    HyperbolicPatch() = default;

    double half_width() const { return d_->half_width; }
    int nodes_per_side() const { return d_->n; }
    int size() const { return d_->n * d_->n; }
    double spacing() const { return d_->h; }

    int index(int row, int col) const { return row * d_->n + col; }
    int row(int k) const { return k / d_->n; }
    int col(int k) const { return k % d_->n; }
    bool is_boundary(int k) const;
    bool is_interior(int k) const { return !is_boundary(k); }

    cd node(int k) const { return d_->z[k]; }
    /// g0 at node k.
    double density(int k) const { return d_->g0[k]; }
    /// Analytic d_z log g0 = 2 conj(z) / (1 - |z|^2).
    cd dlog_density(int k) const { return d_->dlog[k]; }

    /// Indices of interior nodes in row-major order.
    const std::vector<int>& interior() const { return d_->interior; }

    bool operator==(const HyperbolicPatch& o) const;
    bool operator!=(const HyperbolicPatch& o) const { return !(*this == o); }

    friend HyperbolicPatch make_patch(double R, int N);

private:
    struct Data {
        double half_width = 0;
        int n = 0;
        double h = 0;
        std::vector<cd> z;
        std::vector<double> g0;
        std::vector<cd> dlog;
        std::vector<int> interior;
    };
    std::shared_ptr<const Data> d_;
};

/// Throws ConfigError unless 0 < R <= 0.95 and N >= 8.
HyperbolicPatch make_patch(double R, int N);

/// Hyperbolic density 2/(1-|z|^2)^2 at an arbitrary point.
double poincare_density(cd z);

/// Scalar complex field, one value per node.
struct ComplexField {
    HyperbolicPatch patch;
    std::vector<cd> values;

    ComplexField() = default;
    explicit ComplexField(HyperbolicPatch p) : patch(std::move(p)), values(patch.size(), cd(0.0)) {}
};

/// Scalar real field, one value per node.
struct RealField {
    HyperbolicPatch patch;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(HyperbolicPatch p) : patch(std::move(p)), values(patch.size(), 0.0) {}
};

/// n x n complex matrix per node, stored contiguously (column-major per node).
class MatrixField {
public:
    using Map = Eigen::Map<Eigen::MatrixXcd>;
    using ConstMap = Eigen::Map<const Eigen::MatrixXcd>;

    MatrixField() = default;
    MatrixField(HyperbolicPatch patch, int n);

    const HyperbolicPatch& patch() const { return patch_; }
    int rank() const { return n_; }
    int size() const { return patch_.size(); }

    Map at(int k) { return Map(data_.data() + static_cast<std::size_t>(k) * n_ * n_, n_, n_); }
    ConstMap at(int k) const { return ConstMap(data_.data() + static_cast<std::size_t>(k) * n_ * n_, n_, n_); }

    std::vector<cd>& raw() { return data_; }
    const std::vector<cd>& raw() const { return data_; }

    /// Entry (i, j) of every node as a scalar field.
    ComplexField entry(int i, int j) const;

private:
    HyperbolicPatch patch_;
    int n_ = 0;
    std::vector<cd> data_;
};

/// d_z = (d_x - i d_y)/2 with centered differences inside and one-sided
/// second-order stencils on the boundary.
ComplexField d_z(const ComplexField& f);
ComplexField d_zbar(const ComplexField& f);
MatrixField d_z(const MatrixField& f);
MatrixField d_zbar(const MatrixField& f);

/// d_zbar d_z = (d_xx + d_yy)/4; five-point stencil inside, one-sided
/// second-order stencils on the boundary.
ComplexField d_zbar_d_z(const ComplexField& f);

/// Horner evaluation of sum c_k z^k at every node.
ComplexField sample_polynomial(const std::vector<cd>& coeffs, const HyperbolicPatch& patch);

/// Maximum of |f| over interior nodes (fixed row-major order).
double interior_sup_norm(const ComplexField& f);

void require_same_patch(const HyperbolicPatch& a, const HyperbolicPatch& b, const char* what);

}  // namespace hitchin

#pragma once

#include <vector>

#include "hitchin/complex_field.hpp"
#include "hitchin/types.hpp"

namespace hitchin {

/// Line metrics of the H-orthogonal splitting of the filtration
/// F_k = span(s_1, ..., s_k), and the comparison functions against the
/// Fuchsian baseline. Vectors are indexed by l - 1.
struct SplittingData {
    int n = 0;
    std::vector<RealField> h;  ///< h_l, squared H-norm of s_l orthogonal to F_{l-1}
    std::vector<RealField> u;  ///< u_l = log(h_l g0^{(n+1-2l)/2})
    std::vector<RealField> z;  ///< z_l = u_l - u~_l
    std::vector<RealField> v;  ///< v_k = z_1 + ... + z_k (v_n should vanish)
};

/// Throws MetricDegeneracyError if a leading block is singular to 1e-12
/// relative to the largest diagonal entry.
SplittingData splitting_metrics(const MatrixField& H);

/// (12 / (n(n^2-1))) tr(phi H^-1 phi^dag H) at one node, divided by g0.
double energy_density_at(const Eigen::MatrixXcd& phi, const Eigen::MatrixXcd& H, double g0);

/// Energy density of the harmonic map at every node.
RealField energy_density(const MatrixField& phi, const MatrixField& H, const HyperbolicPatch& patch);

/// Hopf coefficient (12 / (n(n^2-1))) tr(phi^2); never looks at H.
ComplexField hopf_coefficient(const MatrixField& phi);

struct GeometryReport {
    RealField energy;     ///< e(f)
    RealField g11;        ///< (1,1) pullback coefficient e(f) g0
    ComplexField hopf;    ///< (2,0) pullback coefficient
    double energy_min = 0;
    double energy_max = 0;
    double interior_energy_min = 0;
    /// Trapezoid rule for the integral of 2 e(f) g0 dx dy over the patch.
    double energy_integral = 0;
    /// Interior sup-norm of the discrete d_zbar of the Hopf coefficient.
    double hopf_dbar_sup = 0;
};

GeometryReport pullback_and_hopf(const MatrixField& phi, const MatrixField& H, const HyperbolicPatch& patch);

}  // namespace hitchin

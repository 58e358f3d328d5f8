#include "hitchin/harmonic_geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "hitchin/errors.hpp"
#include "hitchin/hitchin_solver.hpp"

namespace hitchin {

namespace {

double killing_factor(int n) { return 12.0 / (n * (n * n - 1.0)); }

std::string node_text(const HyperbolicPatch& p, int k) {
    const cd z = p.node(k);
    return "node " + std::to_string(k) + " (z = " + std::to_string(z.real()) + " + " + std::to_string(z.imag()) + "i)";
}

}  // namespace

SplittingData splitting_metrics(const MatrixField& H) {
    const int n = H.rank();
    const HyperbolicPatch& p = H.patch();
    const FuchsianBaseline base = fuchsian_baseline(n, p);

    SplittingData out;
    out.n = n;
    out.h.assign(n, RealField(p));
    out.u.assign(n, RealField(p));
    out.z.assign(n, RealField(p));
    out.v.assign(n, RealField(p));

    for (int k = 0; k < p.size(); ++k) {
        const CMat Hk = H.at(k);
        const CMat Hh = 0.5 * (Hk + Hk.adjoint());
        Eigen::LLT<CMat> llt(Hh);
        if (llt.info() != Eigen::Success || !Hk.allFinite())
            throw MetricDegeneracyError("metric is not positive definite at " + node_text(p, k), k);
        // Cholesky pivots are the leading-minor ratios det H_k / det H_{k-1}.
        const CMat L = llt.matrixL();
        const double scale = Hh.diagonal().real().cwiseAbs().maxCoeff();
        double v = 0.0;
        for (int l = 0; l < n; ++l) {
            const double hl = std::norm(L(l, l));
            if (!(hl > 1e-12 * scale))
                throw MetricDegeneracyError("leading block " + std::to_string(l + 1) + " is singular at " + node_text(p, k), k);
            const double ul = std::log(hl) - base.density_power(l + 1) * std::log(p.density(k));
            const double zl = ul - base.u_tilde[l];
            v += zl;
            out.h[l].values[k] = hl;
            out.u[l].values[k] = ul;
            out.z[l].values[k] = zl;
            out.v[l].values[k] = v;
        }
    }
    return out;
}

double energy_density_at(const Eigen::MatrixXcd& phi, const Eigen::MatrixXcd& H, double g0) {
    const int n = static_cast<int>(phi.rows());
    const Eigen::MatrixXcd Hh = 0.5 * (H + H.adjoint());
    Eigen::LLT<Eigen::MatrixXcd> llt(Hh);
    if (llt.info() != Eigen::Success) throw MetricDegeneracyError("energy density: metric is not positive definite", -1);
    // tr(phi H^-1 phi^dag H) = ||L^dag phi L^-dag||_F^2 for H = L L^dag.
    const Eigen::MatrixXcd U = llt.matrixU();
    const Eigen::MatrixXcd A = U * phi;
    const Eigen::MatrixXcd W = U.transpose().triangularView<Eigen::Lower>().solve(A.transpose()).transpose();
    return killing_factor(n) * W.squaredNorm() / g0;
}

RealField energy_density(const MatrixField& phi, const MatrixField& H, const HyperbolicPatch& patch) {
    require_same_patch(phi.patch(), patch, "energy_density");
    require_same_patch(H.patch(), patch, "energy_density");
    if (phi.rank() != H.rank()) throw ShapeError("energy_density: rank mismatch");
    RealField e(patch);
    for (int k = 0; k < patch.size(); ++k) {
        try {
            e.values[k] = energy_density_at(phi.at(k), H.at(k), patch.density(k));
        } catch (const MetricDegeneracyError&) {
            throw MetricDegeneracyError("energy density: metric is not positive definite at " + node_text(patch, k), k);
        }
    }
    return e;
}

ComplexField hopf_coefficient(const MatrixField& phi) {
    const int n = phi.rank();
    ComplexField f(phi.patch());
    for (int k = 0; k < phi.size(); ++k) {
        const auto a = phi.at(k);
        f.values[k] = killing_factor(n) * (a * a).trace();
    }
    return f;
}

GeometryReport pullback_and_hopf(const MatrixField& phi, const MatrixField& H, const HyperbolicPatch& patch) {
    GeometryReport g;
    g.energy = energy_density(phi, H, patch);
    g.hopf = hopf_coefficient(phi);
    g.g11 = RealField(patch);
    g.energy_min = std::numeric_limits<double>::infinity();
    g.energy_max = -std::numeric_limits<double>::infinity();
    g.interior_energy_min = std::numeric_limits<double>::infinity();
    const int N = patch.nodes_per_side();
    const double h = patch.spacing();
    double integral = 0.0;
    for (int k = 0; k < patch.size(); ++k) {
        const double e = g.energy.values[k];
        g.g11.values[k] = e * patch.density(k);
        g.energy_min = std::min(g.energy_min, e);
        g.energy_max = std::max(g.energy_max, e);
        if (patch.is_interior(k)) g.interior_energy_min = std::min(g.interior_energy_min, e);
        const double wx = (patch.col(k) == 0 || patch.col(k) == N - 1) ? 0.5 : 1.0;
        const double wy = (patch.row(k) == 0 || patch.row(k) == N - 1) ? 0.5 : 1.0;
        integral += wx * wy * 2.0 * g.g11.values[k];
    }
    g.energy_integral = integral * h * h;
    g.hopf_dbar_sup = interior_sup_norm(d_zbar(g.hopf));
    return g;
}

}  // namespace hitchin

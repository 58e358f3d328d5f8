#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "hitchin/errors.hpp"
#include "hitchin/hitchin_solver.hpp"

using namespace hitchin;

namespace {

double max_norm(const MatrixField& f) {
    double m = 0.0;
    for (int k : f.patch().interior()) m = std::max(m, f.at(k).norm());
    return m;
}

// Smooth trace-free Hermitian perturbation vanishing on the patch boundary.
MatrixField smooth_perturbation(const HyperbolicPatch& p, int n, double amp, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXcd A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            A(i, j) = cd(u(rng), u(rng));
            B(i, j) = cd(u(rng), u(rng));
        }
    A = 0.5 * (A + A.adjoint()).eval();
    B = 0.5 * (B + B.adjoint()).eval();
    A.diagonal().array() -= A.trace() / static_cast<double>(n);
    B.diagonal().array() -= B.trace() / static_cast<double>(n);
    const double R = p.half_width();
    MatrixField S(p, n);
    for (int k = 0; k < p.size(); ++k) {
        const cd z = p.node(k);
        const double bump = std::cos(M_PI * z.real() / (2 * R)) * std::cos(M_PI * z.imag() / (2 * R));
        S.at(k) = amp * bump * (A + z.real() * B);
        if (p.is_boundary(k)) S.at(k).setZero();
    }
    return S;
}

// Holomorphic-frame residual with every derivative taken by finite
// differences of H itself: (1/g0)[d_zbar(H^-1 d_z H) - [phi, H^-1 phi^dag H]].
MatrixField naive_residual(const MatrixField& H, const MatrixField& phi) {
    const HyperbolicPatch& p = H.patch();
    const int n = H.rank();
    const MatrixField dH = d_z(H);
    MatrixField A(p, n);
    for (int k = 0; k < p.size(); ++k) A.at(k) = Eigen::MatrixXcd(H.at(k)).inverse() * dH.at(k);
    const MatrixField dA = d_zbar(A);
    MatrixField R(p, n);
    for (int k : p.interior()) {
        const Eigen::MatrixXcd Hk = H.at(k), P = phi.at(k);
        const Eigen::MatrixXcd adj = Hk.inverse() * P.adjoint() * Hk;
        R.at(k) = (dA.at(k) - (P * adj - adj * P)) / p.density(k);
    }
    return R;
}

}  // namespace

TEST_CASE("Fuchsian baseline constants") {
    const HyperbolicPatch p = make_patch(0.5, 16);
    const FuchsianBaseline b2 = fuchsian_baseline(2, p);
    CHECK(b2.u_tilde[0] == doctest::Approx(std::log(2.0) / 2));
    CHECK(b2.u_tilde[1] == doctest::Approx(-std::log(2.0) / 2));
    const FuchsianBaseline b3 = fuchsian_baseline(3, p);
    for (double u : b3.u_tilde) CHECK(std::abs(u) < 1e-15);
    for (int n = 2; n <= 8; ++n) {
        const FuchsianBaseline b = fuchsian_baseline(n, p);
        double sum = 0.0;
        for (double u : b.u_tilde) sum += u;
        CHECK(std::abs(sum) < 1e-13);
        for (int l = 1; l < n; ++l)
            CHECK(std::exp(b.u_tilde[l] - b.u_tilde[l - 1]) == doctest::Approx(l * (n - l) / 2.0).epsilon(1e-13));
        const MatrixField H = b.metric();
        for (int k = 0; k < p.size(); ++k) CHECK(std::abs(Eigen::MatrixXcd(H.at(k)).determinant() - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(fuchsian_baseline(1, p), InvalidRankError);
}

TEST_CASE("assembled Higgs field") {
    const HyperbolicPatch p = make_patch(0.5, 32);
    SUBCASE("zero tuple") {
        const MatrixField phi = assemble_phi(DifferentialTuple::zero(3), p);
        for (int k = 0; k < p.size(); ++k) {
            CHECK(phi.at(k)(1, 0) == cd(1.0));
            CHECK(phi.at(k)(2, 1) == cd(1.0));
            CHECK(phi.at(k).cwiseAbs().sum() == 2.0);
        }
    }
    SUBCASE("n = 2, q2 = z") {
        const MatrixField phi = assemble_phi(DifferentialTuple(2, {{0.0, 1.0}}), p);
        for (int k = 0; k < p.size(); ++k) CHECK(std::abs(phi.at(k)(0, 1) - p.node(k) / 2.0) < 1e-15);
    }
    SUBCASE("entries are holomorphic") {
        const MatrixField phi = assemble_phi(DifferentialTuple(3, {{0.1, 0.2, 0.3}, {0.5, 0.0, 0.0, 1.0}}), p);
        const MatrixField d = d_zbar(phi);
        // q3 carries z^3 whose centered d_zbar error is exactly h^2
        CHECK(max_norm(d) <= 1.01 * p.spacing() * p.spacing());
    }
}

TEST_CASE("baseline is an exact discrete solution") {
    const HyperbolicPatch p = make_patch(0.5, 64);
    for (int n = 2; n <= 6; ++n) {
        CAPTURE(n);
        const FuchsianBaseline b = fuchsian_baseline(n, p);
        const MatrixField phi = assemble_phi(DifferentialTuple::zero(n), p);
        CHECK(max_norm(residual(b.metric(), phi, p)) < 1e-12);
        const HitchinSystem sys(phi, b);
        CHECK(residual_sup_norm(sys, MatrixField(p, n)) < 1e-12);
    }
}

TEST_CASE("finite-difference holomorphic frame agrees to O(h^2)") {
    // Independent check of the unitary-frame assembly and the sign of the
    // commutator term.
    const DifferentialTuple q(3, {{cd(0.3, 0.1), 0.2}, {cd(0.4), cd(0.0, 0.3)}});
    double err[3], h[3];
    const int sizes[3] = {33, 65, 129};
    for (int s = 0; s < 3; ++s) {
        const HyperbolicPatch p = make_patch(0.5, sizes[s]);
        h[s] = p.spacing();
        const HitchinSystem sys(assemble_phi(q, p), fuchsian_baseline(3, p));
        const MatrixField H = sys.metric_from_perturbation(smooth_perturbation(p, 3, 0.3, 4));
        const MatrixField R = sys.residual(H);
        const MatrixField Rn = naive_residual(H, sys.phi());
        // the nested stencil reaches one-sided boundary derivatives on the
        // first interior ring, so compare two rings in
        double e = 0.0;
        const int m = p.nodes_per_side();
        for (int i = 2; i < m - 2; ++i)
            for (int j = 2; j < m - 2; ++j) {
                const int k = p.index(i, j);
                e = std::max(e, (R.at(k) - Rn.at(k)).norm());
            }
        err[s] = e;
        CHECK(max_norm(R) > 1e-2);
    }
    const double order = std::log(err[1] / err[2]) / std::log(h[1] / h[2]);
    CHECK(err[2] < 1e-2);
    CHECK(order > 1.7);
    CHECK(order < 2.3);
}

TEST_CASE("n = 2 diagonal metric reduces to the scalar vortex form") {
    // Oracle: the scalar reduction written out by hand, with the same
    // difference stencils acting on e^{+-w}.
    const HyperbolicPatch p = make_patch(0.5, 40);
    const int N = p.nodes_per_side();
    const double h = p.spacing();
    const cd q2(0.3, -0.2);
    const FuchsianBaseline b = fuchsian_baseline(2, p);
    std::vector<double> w(p.size());
    for (int k = 0; k < p.size(); ++k) w[k] = 0.2 * std::sin(2.0 * p.node(k).real()) + 0.1 * p.node(k).imag();
    MatrixField H(p, 2);
    for (int k = 0; k < p.size(); ++k) {
        H.at(k)(0, 0) = std::pow(p.density(k), -0.5) * std::exp(b.u_tilde[0] + w[k]);
        H.at(k)(1, 1) = std::pow(p.density(k), 0.5) * std::exp(b.u_tilde[1] - w[k]);
    }
    const MatrixField R = residual(H, assemble_phi(DifferentialTuple(2, {{q2}}), p), p);
    auto L = [&](int k, double sign) {
        auto e = [&](int m) { return std::exp(sign * w[m]); };
        const double lap = (e(k + 1) + e(k - 1) + e(k + N) + e(k - N) - 4 * e(k)) / (4 * h * h);
        const double gx = (e(k + 1) - e(k - 1)) / (4 * h), gy = (e(k + N) - e(k - N)) / (4 * h);
        return lap / e(k) - (gx * gx + gy * gy) / (e(k) * e(k));
    };
    double worst = 0.0, worst_cont = 0.0;
    for (int k : p.interior()) {
        const double g0 = p.density(k);
        const double E = (0.5 * (L(k, 1) - L(k, -1)) - g0 / 2 + g0 / 2 * std::exp(-2 * w[k]) -
                          std::norm(q2) * std::exp(2 * w[k]) / (2 * g0)) /
                         g0;
        worst = std::max(worst, std::abs(R.at(k)(0, 0) - E) + std::abs(R.at(k)(1, 1) + E));
        worst = std::max(worst, std::abs(R.at(k)(0, 1)) + std::abs(R.at(k)(1, 0)));
        // continuum: (1/g0)[(1/4) Lap w + (g0/2)(e^{-2w} - 1) - |q|^2 e^{2w}/(2 g0)]
        const double x = p.node(k).real();
        const double lapw = -0.8 * std::sin(2.0 * x);
        const double Ec = (0.25 * lapw + g0 / 2 * (std::exp(-2 * w[k]) - 1) -
                           std::norm(q2) * std::exp(2 * w[k]) / (2 * g0)) /
                          g0;
        worst_cont = std::max(worst_cont, std::abs(R.at(k)(0, 0) - Ec));
    }
    CHECK(worst < 1e-11);
    CHECK(worst_cont < 5e-4);
}

TEST_CASE("diagonal residual embeds into the full residual") {
    const HyperbolicPatch p = make_patch(0.5, 24);
    struct Case {
        int n;
        int j;
    };
    for (Case c : {Case{2, 2}, Case{3, 3}, Case{3, 2}, Case{4, 4}, Case{4, 2}, Case{5, 5}}) {
        CAPTURE(c.n);
        CAPTURE(c.j);
        DifferentialTuple q = DifferentialTuple::zero(c.n);
        q.set(c.j, {cd(0.4, 0.1), cd(0.2)});
        const FuchsianBaseline b = fuchsian_baseline(c.n, p);
        std::vector<RealField> u(c.n, RealField(p));
        MatrixField H(p, c.n);
        for (int k = 0; k < p.size(); ++k) {
            const cd z = p.node(k);
            double sum = 0.0;
            for (int l = 0; l < c.n; ++l) {
                const double bump = p.is_boundary(k) ? 0.0 : 0.1 * (l + 1) * std::cos(z.real() + l) * std::cos(z.imag());
                u[l].values[k] = b.u_tilde[l] + bump;
                sum += bump;
            }
            for (int l = 0; l < c.n; ++l) u[l].values[k] -= sum / c.n;
            for (int l = 0; l < c.n; ++l)
                H.at(k)(l, l) = std::pow(p.density(k), b.density_power(l + 1)) * std::exp(u[l].values[k]);
        }
        const auto rd = residual_diagonal(u, q, p);
        const MatrixField R = residual(H, assemble_phi(q, p), p);
        double worst = 0.0, offdiag = 0.0;
        for (int k : p.interior())
            for (int i = 0; i < c.n; ++i) {
                worst = std::max(worst, std::abs(R.at(k)(i, i) - rd[i].values[k]));
                for (int j = 0; j < c.n; ++j)
                    if (i != j) offdiag = std::max(offdiag, std::abs(R.at(k)(i, j)));
            }
        CHECK(worst < 1e-12);
        // with q_j, j < n, the off-diagonal part vanishes only on the
        // symmetric profile of the actual solution, not for arbitrary bumps
        if (c.j == c.n) CHECK(offdiag < 1e-12);
    }
}

TEST_CASE("diagonal residual guards its ansatz") {
    const HyperbolicPatch p = make_patch(0.5, 12);
    std::vector<RealField> u(3, RealField(p));
    const FuchsianBaseline b = fuchsian_baseline(3, p);
    for (int l = 0; l < 3; ++l)
        for (double& v : u[l].values) v = b.u_tilde[l];
    CHECK_THROWS_AS(residual_diagonal(u, DifferentialTuple(3, {{0.1}, {0.2}}), p), AnsatzError);
    std::vector<RealField> u4(4, RealField(p));
    CHECK_THROWS_AS(residual_diagonal(u4, DifferentialTuple(4, {{}, {0.3}, {}}), p), AnsatzError);
    u[0].values[5] += 1.0;
    CHECK_THROWS_AS(residual_diagonal(u, DifferentialTuple(3, {{}, {0.2}}), p), ShapeError);
    CHECK(HitchinSystem::diagonal_compatible(DifferentialTuple::zero(5)));
}

TEST_CASE("n = 3, q3 = 1 at the baseline") {
    const HyperbolicPatch p = make_patch(0.5, 16);
    std::vector<RealField> u(3, RealField(p));
    const DifferentialTuple q(3, {{}, {1.0}});
    const auto r = residual_diagonal(u, q, p);
    for (int k : p.interior()) {
        CHECK(r[0].values[k] < -1e-3);
        CHECK(r[2].values[k] > 1e-3);
        CHECK(std::abs(r[0].values[k] + r[2].values[k]) < 1e-14);
        CHECK(std::abs(r[1].values[k]) < 1e-14);
    }
}

TEST_CASE("residual structure on arbitrary metrics") {
    const HyperbolicPatch p = make_patch(0.5, 20);
    const DifferentialTuple q(4, {{0.2}, {cd(0.0, 0.3)}, {0.1, 0.1}});
    const HitchinSystem sys(assemble_phi(q, p), fuchsian_baseline(4, p));
    const MatrixField S = smooth_perturbation(p, 4, 0.5, 9);
    const MatrixField H = sys.metric_from_perturbation(S);
    const MatrixField R = sys.residual(H);
    const MatrixField G = sys.normalized_residual(S);
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int k = 0; k < p.size(); ++k) {
        if (p.is_boundary(k)) {
            CHECK(R.at(k).norm() == 0.0);
            CHECK(G.at(k).norm() == 0.0);
            continue;
        }
        const CMat r = R.at(k);
        CHECK(std::abs(r.trace()) < 1e-12 * r.norm());
        const CMat hr = CMat(H.at(k)) * r;
        CHECK((hr - hr.adjoint()).norm() < 1e-10 * hr.norm());
        const CMat g = G.at(k);
        CHECK((g - g.adjoint()).norm() == 0.0);
        CHECK(std::abs(g.trace()) < 1e-14 * g.norm());
        // G is R in the K-orthonormal frame: K^{1/2} (D R D^-1) K^{-1/2}.
        es.compute(CMat(S.at(k)));
        const CMat U = es.eigenvectors();
        const CMat half = U * (0.5 * es.eigenvalues().array()).exp().matrix().asDiagonal() * U.adjoint();
        const CMat ihalf = U * (-0.5 * es.eigenvalues().array()).exp().matrix().asDiagonal() * U.adjoint();
        CMat rp = r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                rp(i, j) *= sys.baseline().frame_scale(k, i + 1) / sys.baseline().frame_scale(k, j + 1);
        CHECK((half * rp * ihalf - g).norm() < 1e-10 * g.norm());
    }
}

TEST_CASE("residual is invariant under constant diagonal unitary gauge") {
    const HyperbolicPatch p = make_patch(0.5, 20);
    const DifferentialTuple q(3, {{0.3, 0.1}, {cd(0.2, 0.4)}});
    const MatrixField phi = assemble_phi(q, p);
    const HitchinSystem sys(phi, fuchsian_baseline(3, p));
    const MatrixField H = sys.metric_from_perturbation(smooth_perturbation(p, 3, 0.4, 2));
    const Eigen::Vector3cd g(std::polar(1.0, 0.3), std::polar(1.0, -1.1), std::polar(1.0, 2.0));
    MatrixField phi2(p, 3), H2(p, 3);
    for (int k = 0; k < p.size(); ++k) {
        phi2.at(k) = g.asDiagonal() * phi.at(k) * g.conjugate().asDiagonal();
        H2.at(k) = g.asDiagonal() * H.at(k) * g.conjugate().asDiagonal();
    }
    const MatrixField R1 = residual(H, phi, p);
    const MatrixField R2 = residual(H2, phi2, p);
    const double a = max_norm(R1), b = max_norm(R2);
    CHECK(a > 1e-3);
    CHECK(std::abs(a - b) < 1e-12 * a);
}

TEST_CASE("degenerate metric is reported with its node") {
    const HyperbolicPatch p = make_patch(0.5, 10);
    const MatrixField phi = assemble_phi(DifferentialTuple::zero(2), p);
    MatrixField H = fuchsian_baseline(2, p).metric();
    H.at(37)(1, 1) = -1.0;
    try {
        residual(H, phi, p);
        FAIL("expected a degeneracy error");
    } catch (const MetricDegeneracyError& e) {
        CHECK(e.node() == 37);
        CHECK(std::string(e.what()).find("37") != std::string::npos);
    }
    MatrixField bad(p, 3);
    CHECK_THROWS_AS(residual(bad, phi, p), ShapeError);
}

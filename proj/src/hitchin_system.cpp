#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hitchin/errors.hpp"
#include "hitchin/hitchin_solver.hpp"

namespace hitchin {

FuchsianBaseline fuchsian_baseline(int n, const HyperbolicPatch& patch) {
    const auto r = principal_coefficients(n);
    if (n > kMaxRank) throw InvalidRankError("field solvers support rank <= " + std::to_string(kMaxRank));
    FuchsianBaseline b;
    b.n = n;
    b.patch = patch;
    // u~_{l+1} - u~_l = log r_l; fix the offset with sum u~ = 0.
    std::vector<double> u(n, 0.0);
    for (int l = 1; l < n; ++l) u[l] = u[l - 1] + std::log(boost::rational_cast<double>(r[l - 1]));
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= n;
    for (double& v : u) v -= mean;
    b.u_tilde = std::move(u);
    return b;
}

double FuchsianBaseline::frame_scale(int k, int l) const {
    return std::pow(patch.density(k), 0.5 * density_power(l)) * std::exp(0.5 * u_tilde[l - 1]);
}

MatrixField FuchsianBaseline::metric() const {
    MatrixField H(patch, n);
    for (int k = 0; k < patch.size(); ++k)
        for (int l = 1; l <= n; ++l) {
            const double s = frame_scale(k, l);
            H.at(k)(l - 1, l - 1) = s * s;
        }
    return H;
}

MatrixField assemble_phi(const DifferentialTuple& q, const HyperbolicPatch& patch) {
    const int n = q.rank();
    MatrixField phi(patch, n);
    for (int k = 0; k < patch.size(); ++k) phi.at(k) = higgs_matrix(q, patch.node(k));
    return phi;
}

// ---------------------------------------------------------------------------

HitchinSystem::HitchinSystem(const MatrixField& phi, FuchsianBaseline baseline)
    : n_(baseline.n), base_(std::move(baseline)), phi_(phi) {
    if (phi.rank() != n_) throw ShapeError("HitchinSystem: Higgs field rank differs from baseline rank");
    require_same_patch(phi.patch(), base_.patch, "HitchinSystem");
    const int nodes = patch().size();
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;

    scale_.resize(static_cast<std::size_t>(nodes) * n_);
    for (int k = 0; k < nodes; ++k)
        for (int l = 1; l <= n_; ++l) scale_[static_cast<std::size_t>(k) * n_ + l - 1] = base_.frame_scale(k, l);

    phi_unitary_.resize(nodes * nn);
    phi_abs2_.resize(nodes * nn);
    for (int k = 0; k < nodes; ++k) {
        const double* d = &scale_[static_cast<std::size_t>(k) * n_];
        Eigen::Map<Eigen::MatrixXcd> pu(phi_unitary_.data() + k * nn, n_, n_);
        const auto src = phi_.at(k);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                pu(i, j) = src(i, j) * (d[i] / d[j]);
                phi_abs2_[k * nn + i * n_ + j] = std::norm(pu(i, j));
            }
    }

    xdiag_.resize(n_);
    for (int l = 1; l <= n_; ++l) xdiag_(l - 1) = -0.25 * (n_ + 1 - 2 * l);
}

bool HitchinSystem::diagonal_compatible(const DifferentialTuple& q) {
    const int n = q.rank();
    int nonzero = 0;
    int which = 0;
    for (int j = 2; j <= n; ++j)
        if (!q.is_zero(j)) {
            ++nonzero;
            which = j;
        }
    return nonzero == 0 || (nonzero == 1 && (which == 2 || which == n));
}

CMat HitchinSystem::hermitian_part(int k, const std::vector<cd>& K, const CMat& Kinv) const {
    const int n = n_;
    const int N = patch().nodes_per_side();
    const double h = patch().spacing();
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    auto block = [&](int idx) { return Eigen::Map<const Eigen::MatrixXcd>(K.data() + idx * nn, n, n); };

    const CMat Kc = block(k);
    const CMat Ke = block(k + 1), Kw = block(k - 1), Kn = block(k + N), Ks = block(k - N);
    const cd iu(0.0, 1.0);

    const CMat B = ((Ke - Kw) - iu * (Kn - Ks)) * (0.25 / h);  // d_z K
    const CMat Bd = B.adjoint();                                // d_zbar K
    const CMat lap = (Ke + Kw + Kn + Ks - 4.0 * Kc) * (0.25 / (h * h));

    const double g0 = patch().density(k);
    const cd b = patch().dlog_density(k);
    const cd bc = std::conj(b);
    const auto X = xdiag_.asDiagonal();

    const CMat XK = X * Kc;
    const CMat KX = Kc * X;
    const CMat KinvB = Kinv * B;

    CMat M = lap - Bd * KinvB;
    M += g0 * (XK + KX);
    M += b * (X * Bd) + bc * (B * X) - b * (Bd * Kinv * XK) - bc * (KX * KinvB);
    M -= std::norm(b) * (KX * Kinv * XK - X * KX);

    const auto P = unitary_phi(k);
    const CMat KP = Kc * P;
    M -= KP * Kinv * KP.adjoint();
    M += P.adjoint() * KP;
    return M;
}

MatrixField HitchinSystem::residual(const MatrixField& H) const {
    if (H.rank() != n_) throw ShapeError("residual: metric rank differs from Higgs field rank");
    require_same_patch(H.patch(), patch(), "residual");
    const int nodes = patch().size();
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;

    std::vector<cd> K(nodes * nn);
    std::vector<cd> Kinv(nodes * nn);
    const CMat id = CMat::Identity(n_, n_);
    for (int k = 0; k < nodes; ++k) {
        const double* d = &scale_[static_cast<std::size_t>(k) * n_];
        Eigen::Map<Eigen::MatrixXcd> Kk(K.data() + k * nn, n_, n_);
        const auto Hk = H.at(k);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) Kk(i, j) = Hk(i, j) / (d[i] * d[j]);
        const CMat Kh = 0.5 * (CMat(Kk) + CMat(Kk).adjoint());
        Eigen::LLT<CMat> llt(Kh);
        if (llt.info() != Eigen::Success || !H.at(k).allFinite()) {
            const cd z = patch().node(k);
            throw MetricDegeneracyError("metric is not positive definite at node " + std::to_string(k) + " (z = " +
                                            std::to_string(z.real()) + " + " + std::to_string(z.imag()) + "i)",
                                        k);
        }
        Eigen::Map<Eigen::MatrixXcd>(Kinv.data() + k * nn, n_, n_) = llt.solve(id);
    }

    MatrixField R(patch(), n_);
    for (int k : patch().interior()) {
        const CMat Ki = Eigen::Map<const Eigen::MatrixXcd>(Kinv.data() + k * nn, n_, n_);
        CMat M = hermitian_part(k, K, Ki);
        M = 0.5 * (M + M.adjoint()).eval();
        CMat Rp = Ki * M / patch().density(k);
        // The discrete trace is O(h^2), far above a converged residual; a
        // second pass removes the rounding left by the first.
        for (int pass = 0; pass < 2; ++pass) Rp.diagonal().array() -= Rp.trace() / static_cast<double>(n_);
        const double* d = &scale_[static_cast<std::size_t>(k) * n_];
        auto out = R.at(k);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) out(i, j) = Rp(i, j) * (d[j] / d[i]);
    }
    return R;
}

MatrixField HitchinSystem::normalized_residual(const MatrixField& S) const {
    if (S.rank() != n_) throw ShapeError("normalized_residual: rank mismatch");
    require_same_patch(S.patch(), patch(), "normalized_residual");
    const int nodes = patch().size();
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;

    std::vector<cd> K(nodes * nn, cd(0.0));
    std::vector<cd> Kinv(nodes * nn), half_inv(nodes * nn);
    using Map = Eigen::Map<Eigen::MatrixXcd>;
    using ConstMap = Eigen::Map<const Eigen::MatrixXcd>;
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int k = 0; k < nodes; ++k) {
        Map Kk(K.data() + k * nn, n_, n_), Ki(Kinv.data() + k * nn, n_, n_), Hi(half_inv.data() + k * nn, n_, n_);
        const auto Sk = S.at(k);
        if (Sk.isZero(0.0)) {
            Kk.setIdentity();
            Ki.setIdentity();
            Hi.setIdentity();
            continue;
        }
        es.compute(CMat(Sk));
        const CMat& U = es.eigenvectors();
        const RVec lam = es.eigenvalues();
        Kk = U * lam.array().exp().matrix().asDiagonal() * U.adjoint();
        Ki = U * (-lam.array()).exp().matrix().asDiagonal() * U.adjoint();
        Hi = U * (-0.5 * lam.array()).exp().matrix().asDiagonal() * U.adjoint();
    }

    MatrixField G(patch(), n_);
    for (int k : patch().interior()) {
        const CMat hi = ConstMap(half_inv.data() + k * nn, n_, n_);
        CMat M = hermitian_part(k, K, CMat(ConstMap(Kinv.data() + k * nn, n_, n_)));
        CMat g = hi * M * hi / patch().density(k);
        g = 0.5 * (g + g.adjoint()).eval();
        for (int pass = 0; pass < 2; ++pass) g.diagonal().array() -= g.trace().real() / n_;
        G.at(k) = g;
    }
    return G;
}

void HitchinSystem::diagonal_residual(const std::vector<double>& z, std::vector<double>& out) const {
    const int n = n_;
    const int nodes = patch().size();
    const int N = patch().nodes_per_side();
    const double h = patch().spacing();
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    if (z.size() != static_cast<std::size_t>(nodes) * n) throw ShapeError("diagonal_residual: wrong input length");

    std::vector<double> kv(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) kv[i] = std::exp(z[i]);
    out.assign(z.size(), 0.0);

    for (int k : patch().interior()) {
        const double g0 = patch().density(k);
        const double* a2 = &phi_abs2_[k * nn];
        const double* kc = &kv[static_cast<std::size_t>(k) * n];
        double* o = &out[static_cast<std::size_t>(k) * n];
        double trace = 0.0;
        for (int l = 0; l < n; ++l) {
            const double ke = kv[static_cast<std::size_t>(k + 1) * n + l];
            const double kw = kv[static_cast<std::size_t>(k - 1) * n + l];
            const double kn = kv[static_cast<std::size_t>(k + N) * n + l];
            const double ks = kv[static_cast<std::size_t>(k - N) * n + l];
            const double lap = (ke + kw + kn + ks - 4.0 * kc[l]) * (0.25 / (h * h));
            const double bx = (ke - kw) * (0.25 / h);
            const double by = (kn - ks) * (0.25 / h);
            double higgs = 0.0;
            for (int j = 0; j < n; ++j) higgs += kc[l] * kc[l] * a2[l * n + j] / kc[j] - a2[j * n + l] * kc[j];
            const double m = lap - (bx * bx + by * by) / kc[l] + 2.0 * g0 * xdiag_(l) * kc[l] - higgs;
            o[l] = m / (g0 * kc[l]);
            trace += o[l];
        }
        trace /= n;
        for (int l = 0; l < n; ++l) o[l] -= trace;
    }
}

MatrixField HitchinSystem::metric_from_perturbation(const MatrixField& S) const {
    MatrixField H(patch(), n_);
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int k = 0; k < patch().size(); ++k) {
        CMat K;
        if (S.at(k).isZero(0.0)) {
            K = CMat::Identity(n_, n_);
        } else {
            es.compute(CMat(S.at(k)));
            K = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                es.eigenvectors().adjoint();
        }
        const double* d = &scale_[static_cast<std::size_t>(k) * n_];
        auto Hk = H.at(k);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) Hk(i, j) = K(i, j) * (d[i] * d[j]);
    }
    return H;
}

MatrixField residual(const MatrixField& H, const MatrixField& phi, const HyperbolicPatch& patch) {
    require_same_patch(H.patch(), patch, "residual");
    return HitchinSystem(phi, fuchsian_baseline(phi.rank(), patch)).residual(H);
}

std::vector<RealField> residual_diagonal(const std::vector<RealField>& u, const DifferentialTuple& q,
                                         const HyperbolicPatch& patch) {
    const int n = q.rank();
    if (!HitchinSystem::diagonal_compatible(q))
        throw AnsatzError("diagonal residual needs a tuple with only q_2 or only q_n nonzero");
    if (static_cast<int>(u.size()) != n) throw ShapeError("residual_diagonal: expected n scalar fields");
    for (const auto& f : u) require_same_patch(f.patch, patch, "residual_diagonal");

    const HitchinSystem sys(assemble_phi(q, patch), fuchsian_baseline(n, patch));
    const auto& ut = sys.baseline().u_tilde;
    std::vector<double> z(static_cast<std::size_t>(patch.size()) * n);
    for (int k = 0; k < patch.size(); ++k) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l) {
            sum += u[l].values[k];
            z[static_cast<std::size_t>(k) * n + l] = u[l].values[k] - ut[l];
        }
        if (std::abs(sum) > 1e-8) throw ShapeError("residual_diagonal: u_l must sum to zero at every node");
    }
    std::vector<double> r;
    sys.diagonal_residual(z, r);
    std::vector<RealField> out(n, RealField(patch));
    for (int k = 0; k < patch.size(); ++k)
        for (int l = 0; l < n; ++l) out[l].values[k] = r[static_cast<std::size_t>(k) * n + l];
    return out;
}

}  // namespace hitchin

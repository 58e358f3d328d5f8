#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "hitchin/errors.hpp"
#include "hitchin/hitchin_solver.hpp"
#include "hitchin/newton_krylov.hpp"

namespace hitchin {

std::string to_string(SolveMode m) { return m == SolveMode::full ? "full" : "diagonal"; }

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iterations: return "max-iterations";
        case Termination::nan_detected: return "nan-detected";
    }
    return "unknown";
}

void SolveConfig::validate() const {
    if (q.rank() < 2) throw ConfigError("solve: tuple rank must be at least 2");
    if (q.rank() > kMaxRank) throw ConfigError(fmt::format("solve: rank {} exceeds the supported maximum {}", q.rank(), kMaxRank));
    if (!(tol > 0.0)) throw ConfigError("solve: tol must be positive");
    if (max_iter < 1) throw ConfigError("solve: max_iter must be at least 1");
    if (fallback_max_iter < 0) throw ConfigError("solve: fallback_max_iter must be nonnegative");
    if (!(krylov_rtol > 0.0 && krylov_rtol < 1.0)) throw ConfigError("solve: krylov_rtol must lie in (0, 1)");
    if (krylov_restart < 1 || krylov_max_iter < 1) throw ConfigError("solve: Krylov limits must be positive");
    if (line_search_max < 1) throw ConfigError("solve: line_search_max must be at least 1");
    if (!(fallback_tau > 0.0)) throw ConfigError("solve: fallback_tau must be positive");
    if (!(precondition_shift > 0.0)) throw ConfigError("solve: precondition_shift must be positive");
    if (mode == SolveMode::diagonal && !HitchinSystem::diagonal_compatible(q))
        throw AnsatzError("diagonal mode needs a tuple with only q_2 or only q_n nonzero");
    make_patch(R, N);
}

MatrixField MetricState::metric() const {
    const HyperbolicPatch& p = baseline.patch;
    const int n = baseline.n;
    MatrixField H(p, n);
    Eigen::SelfAdjointEigenSolver<CMat> es;
    for (int k = 0; k < p.size(); ++k) {
        CMat K;
        if (S.at(k).isZero(0.0)) {
            K = CMat::Identity(n, n);
        } else {
            es.compute(CMat(S.at(k)));
            K = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().adjoint();
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                H.at(k)(i, j) = K(i, j) * (baseline.frame_scale(k, i + 1) * baseline.frame_scale(k, j + 1));
    }
    return H;
}

double residual_sup_norm(const HitchinSystem& sys, const MatrixField& S) {
    const MatrixField G = sys.normalized_residual(S);
    double m = 0.0;
    for (int k : sys.patch().interior()) m = std::max(m, G.at(k).norm());
    return m;
}

namespace {

// Unknowns live on interior nodes only. Full mode packs, per node, the first
// n-1 diagonal entries of S and then (Re, Im) of S_ij for i < j; the last
// diagonal entry is minus the sum of the others.
class FullProblem final : public NonlinearSystem {
public:
    explicit FullProblem(const HitchinSystem& sys)
        : sys_(sys), n_(sys.rank()), per_node_(n_ * n_ - 1), S_(sys.patch(), n_) {}

    int dimension() const override { return per_node_ * static_cast<int>(sys_.patch().interior().size()); }
    int per_node() const { return per_node_; }

    void unpack(const Eigen::VectorXd& x, MatrixField& S) const {
        const auto& interior = sys_.patch().interior();
        for (std::size_t m = 0; m < interior.size(); ++m) {
            const double* p = x.data() + m * per_node_;
            auto s = S.at(interior[m]);
            double tr = 0.0;
            for (int l = 0; l < n_ - 1; ++l) {
                s(l, l) = p[l];
                tr += p[l];
            }
            s(n_ - 1, n_ - 1) = -tr;
            int c = n_ - 1;
            for (int i = 0; i < n_; ++i)
                for (int j = i + 1; j < n_; ++j, c += 2) {
                    s(i, j) = cd(p[c], p[c + 1]);
                    s(j, i) = cd(p[c], -p[c + 1]);
                }
        }
    }

    void pack(const MatrixField& G, Eigen::VectorXd& F) const {
        const auto& interior = sys_.patch().interior();
        F.resize(dimension());
        for (std::size_t m = 0; m < interior.size(); ++m) {
            double* p = F.data() + m * per_node_;
            const auto g = G.at(interior[m]);
            for (int l = 0; l < n_ - 1; ++l) p[l] = g(l, l).real();
            int c = n_ - 1;
            for (int i = 0; i < n_; ++i)
                for (int j = i + 1; j < n_; ++j, c += 2) {
                    p[c] = g(i, j).real();
                    p[c + 1] = g(i, j).imag();
                }
        }
    }

    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& F) override {
        unpack(x, S_);
        const MatrixField G = sys_.normalized_residual(S_);
        pack(G, F);
        double m = 0.0;
        for (int k : sys_.patch().interior()) {
            const double v = G.at(k).norm();
            if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
            m = std::max(m, v);
        }
        return m;
    }

private:
    const HitchinSystem& sys_;
    int n_;
    int per_node_;
    MatrixField S_;
};

// Diagonal mode: K = diag(e^{z_l}), unknowns z_1..z_{n-1} per interior node.
class DiagonalProblem final : public NonlinearSystem {
public:
    explicit DiagonalProblem(const HitchinSystem& sys)
        : sys_(sys), n_(sys.rank()), z_(static_cast<std::size_t>(sys.patch().size()) * n_, 0.0) {}

    int dimension() const override { return (n_ - 1) * static_cast<int>(sys_.patch().interior().size()); }
    int per_node() const { return n_ - 1; }

    void unpack(const Eigen::VectorXd& x, MatrixField& S) const {
        const auto& interior = sys_.patch().interior();
        for (std::size_t m = 0; m < interior.size(); ++m) {
            auto s = S.at(interior[m]);
            double tr = 0.0;
            for (int l = 0; l < n_ - 1; ++l) {
                s(l, l) = x[m * (n_ - 1) + l];
                tr += x[m * (n_ - 1) + l];
            }
            s(n_ - 1, n_ - 1) = -tr;
        }
    }

    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& F) override {
        const auto& interior = sys_.patch().interior();
        for (std::size_t m = 0; m < interior.size(); ++m) {
            double* z = &z_[static_cast<std::size_t>(interior[m]) * n_];
            double tr = 0.0;
            for (int l = 0; l < n_ - 1; ++l) {
                z[l] = x[m * (n_ - 1) + l];
                tr += z[l];
            }
            z[n_ - 1] = -tr;
        }
        sys_.diagonal_residual(z_, out_);
        F.resize(dimension());
        double sup = 0.0;
        for (std::size_t m = 0; m < interior.size(); ++m) {
            const double* o = &out_[static_cast<std::size_t>(interior[m]) * n_];
            double s2 = 0.0;
            for (int l = 0; l < n_; ++l) s2 += o[l] * o[l];
            for (int l = 0; l < n_ - 1; ++l) F[m * (n_ - 1) + l] = o[l];
            if (!std::isfinite(s2)) return std::numeric_limits<double>::quiet_NaN();
            sup = std::max(sup, std::sqrt(s2));
        }
        return sup;
    }

private:
    const HitchinSystem& sys_;
    int n_;
    std::vector<double> z_;
    std::vector<double> out_;
};

// Approximate inverse Jacobian: every component sees -(1/g0) A with
// A = -(1/4) Lap_h + shift g0, Dirichlet rows dropped.
class LaplacePreconditioner {
public:
    LaplacePreconditioner(const HyperbolicPatch& patch, int components, double shift)
        : components_(components), m_(static_cast<int>(patch.interior().size())) {
        const int N = patch.nodes_per_side();
        const double h = patch.spacing();
        std::vector<int> pos(patch.size(), -1);
        for (int m = 0; m < m_; ++m) pos[patch.interior()[m]] = m;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(m_) * 5);
        g0_.resize(m_);
        const double c = 0.25 / (h * h);
        for (int m = 0; m < m_; ++m) {
            const int k = patch.interior()[m];
            g0_[m] = patch.density(k);
            trip.emplace_back(m, m, 4.0 * c + shift * g0_[m]);
            for (int nb : {k + 1, k - 1, k + N, k - N})
                if (pos[nb] >= 0) trip.emplace_back(m, pos[nb], -c);
        }
        Eigen::SparseMatrix<double> A(m_, m_);
        A.setFromTriplets(trip.begin(), trip.end());
        ldlt_.compute(A);
        if (ldlt_.info() != Eigen::Success) throw Error("preconditioner factorization failed");
        rhs_.resize(m_);
    }

    void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) {
        out.resize(v.size());
        for (int c = 0; c < components_; ++c) {
            for (int m = 0; m < m_; ++m) rhs_[m] = g0_[m] * v[m * components_ + c];
            const Eigen::VectorXd y = ldlt_.solve(rhs_);
            for (int m = 0; m < m_; ++m) out[m * components_ + c] = -y[m];
        }
    }

private:
    int components_;
    int m_;
    Eigen::VectorXd g0_;
    Eigen::VectorXd rhs_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

IterateRecord diagnose(const HitchinSystem& sys, const MatrixField& S, double residual, int krylov, double step) {
    IterateRecord rec;
    rec.residual = residual;
    rec.krylov_iterations = krylov;
    rec.step = step;
    const MatrixField H = sys.metric_from_perturbation(S);
    const MatrixField R = sys.residual(H);
    for (int k = 0; k < sys.patch().size(); ++k)
        rec.max_det_error = std::max(rec.max_det_error, std::abs(CMat(H.at(k)).determinant() - 1.0));
    for (int k : sys.patch().interior()) {
        const CMat r = R.at(k);
        const double rn = r.norm();
        if (rn > 0.0) rec.trace_defect = std::max(rec.trace_defect, std::abs(r.trace()) / rn);
        const CMat hr = CMat(H.at(k)) * r;
        const double hn = hr.norm();
        if (hn > 0.0) rec.hermitian_defect = std::max(rec.hermitian_defect, (hr - hr.adjoint()).norm() / hn);
    }
    return rec;
}

}  // namespace

SolveResult solve(const SolveConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const int n = config.q.rank();
    const HyperbolicPatch patch = make_patch(config.R, config.N);
    const HitchinSystem sys(assemble_phi(config.q, patch), fuchsian_baseline(n, patch));

    std::unique_ptr<FullProblem> full;
    std::unique_ptr<DiagonalProblem> diag;
    NonlinearSystem* problem = nullptr;
    int per_node = 0;
    if (config.mode == SolveMode::full) {
        full = std::make_unique<FullProblem>(sys);
        problem = full.get();
        per_node = full->per_node();
    } else {
        diag = std::make_unique<DiagonalProblem>(sys);
        problem = diag.get();
        per_node = diag->per_node();
    }

    SolveResult result{MetricState{sys.baseline(), MatrixField(patch, n)}, SolveReport{}, config};
    SolveReport& rep = result.report;
    auto to_state = [&](const Eigen::VectorXd& x) {
        if (full)
            full->unpack(x, result.state.S);
        else
            diag->unpack(x, result.state.S);
    };
    auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& F) {
        ++rep.residual_evaluations;
        return problem->evaluate(x, F);
    };

    std::unique_ptr<LaplacePreconditioner> pre;
    LinearOperator pre_op;
    if (config.precondition) {
        pre = std::make_unique<LaplacePreconditioner>(patch, per_node, config.precondition_shift);
        pre_op = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { pre->apply(v, out); };
    }

    const int dim = problem->dimension();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim), F(dim), xt(dim), Ft(dim), d(dim);
    double norm = eval(x, F);
    rep.residual_history.push_back(norm);
    rep.iterates.push_back(diagnose(sys, result.state.S, norm, 0, 0.0));

    auto finish = [&](Termination t, std::string msg) {
        rep.termination = t;
        rep.message = std::move(msg);
        to_state(x);
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return result;
    };

    if (!std::isfinite(norm)) return finish(Termination::nan_detected, "residual of the initial guess is not finite");

    const GmresOptions gopt{config.krylov_rtol, config.krylov_restart, config.krylov_max_iter};
    // Newton counts as stalled when the line search fails or five accepted
    // steps together fail to halve the residual.
    bool stalled = false;
    while (norm >= config.tol) {
        if (rep.newton_iterations >= config.max_iter) break;
        FiniteDifferenceJacobian J(*problem, x, F);
        const LinearOperator jop = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) { J.apply(v, out); };
        const GmresResult gr = gmres(jop, -F, d, gopt, pre ? &pre_op : nullptr);
        rep.residual_evaluations += J.evaluations();
        if (!d.allFinite()) return finish(Termination::nan_detected, "Newton direction is not finite");

        double lambda = 1.0;
        bool accepted = false;
        for (int t = 0; t < config.line_search_max; ++t, lambda *= 0.5) {
            xt = x + lambda * d;
            const double nt = eval(xt, Ft);
            if (std::isfinite(nt) && nt < norm) {
                x.swap(xt);
                F.swap(Ft);
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        ++rep.newton_iterations;
        rep.residual_history.push_back(norm);
        to_state(x);
        rep.iterates.push_back(diagnose(sys, result.state.S, norm, gr.iterations, lambda));
        const auto& hist = rep.residual_history;
        if (hist.size() > 5 && norm > 0.5 * hist[hist.size() - 6] && norm >= config.tol) {
            stalled = true;
            break;
        }
    }
    if (norm < config.tol) return finish(Termination::converged, "");
    if (!stalled)
        return finish(Termination::max_iterations, fmt::format("Newton stopped after {} iterations", rep.newton_iterations));

    // Damped fixed point S <- S + tau G; G is already the trace-free Hermitian
    // part of the residual in the K-orthonormal frame.
    double h2g = std::numeric_limits<double>::infinity();
    for (int k : patch.interior()) h2g = std::min(h2g, patch.density(k));
    h2g *= patch.spacing() * patch.spacing();
    const double tau_max = config.fallback_tau * h2g;
    double tau = tau_max;
    while (norm >= config.tol && rep.fallback_iterations < config.fallback_max_iter) {
        xt = x + tau * F;
        const double nt = eval(xt, Ft);
        if (std::isfinite(nt) && nt < norm) {
            x.swap(xt);
            F.swap(Ft);
            norm = nt;
            ++rep.fallback_iterations;
            rep.residual_history.push_back(norm);
            tau = std::min(tau * 1.25, tau_max);
        } else {
            tau *= 0.5;
            if (tau < 1e-12 * tau_max) break;
        }
    }
    if (norm < config.tol) return finish(Termination::converged, "converged in the fixed-point fallback");
    return finish(Termination::max_iterations,
                  fmt::format("Newton stalled after {} iterations; fallback stopped after {} steps at residual {:.3e}",
                              rep.newton_iterations, rep.fallback_iterations, norm));
}

}  // namespace hitchin

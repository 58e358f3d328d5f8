#pragma once

#include <string>
#include <vector>

#include "hitchin/complex_field.hpp"
#include "hitchin/lie_algebra.hpp"
#include "hitchin/types.hpp"

namespace hitchin {

/// Harmonic metric of the zero tuple: H~ = diag(g0^{-(n+1-2l)/2} e^{u~_l})
/// with e^{u~_{l+1} - u~_l} = l(n-l)/2 and sum u~_l = 0.
struct FuchsianBaseline {
    int n = 0;
    HyperbolicPatch patch;
    std::vector<double> u_tilde;

    /// Exponent of g0 in the l-th metric entry, -(n+1-2l)/2 (l is 1-based).
    double density_power(int l) const { return -0.5 * (n + 1 - 2 * l); }
    /// sqrt(h~_l) at node k. The frame e_l = s_l / sqrt(h~_l) is H~-unitary.
    double frame_scale(int k, int l) const;
    /// H~ as a matrix field.
    MatrixField metric() const;
};

FuchsianBaseline fuchsian_baseline(int n, const HyperbolicPatch& patch);

/// Per-node Hitchin-section Higgs matrix (gauged form) of the tuple.
MatrixField assemble_phi(const DifferentialTuple& q, const HyperbolicPatch& patch);

/// Discrete Hitchin operator for a fixed Higgs field.
///
/// The metric is written H = D K D with D = H~^{1/2}. Everything is assembled
/// in the H~-unitary frame, where the curvature of H reads
///
///   F = dbar(K^-1 dK) + g0 (K^-1 X K + X) + b dbar(K^-1 X K)
///       - conj(b) [X, K^-1 dK] - |b|^2 [X, K^-1 X K],
///
/// with X = diag(-(n+1-2l)/4) and b = d_z log g0. Derivatives of K are finite
/// differences; b and d_zbar b = g0 are analytic, so the baseline K = I is an
/// exact discrete solution. The residual is
///
///   R = (1/g0) [F - [phi', K^-1 phi'^dag K]],   phi' = D phi D^-1,
///
/// assembled as the Hermitian matrix K F, then projected to trace zero.
class HitchinSystem {
public:
    HitchinSystem(const MatrixField& phi, FuchsianBaseline baseline);

    int rank() const { return n_; }
    const HyperbolicPatch& patch() const { return base_.patch; }
    const FuchsianBaseline& baseline() const { return base_; }
    const MatrixField& phi() const { return phi_; }

    /// Residual of a holomorphic-frame metric H, zero on boundary nodes.
    /// Throws MetricDegeneracyError if H is not positive definite somewhere.
    MatrixField residual(const MatrixField& H) const;

    /// Frame-normalized residual G = e^{S/2} R_unitary e^{-S/2} of the
    /// perturbation S (K = e^S): Hermitian and trace-free at every interior
    /// node, zero on the boundary.
    MatrixField normalized_residual(const MatrixField& S) const;

    /// Diagonal of the unitary-frame residual for K = diag(e^{z_l}).
    /// `z` and `out` are node-major, n values per node. Boundary rows are zero.
    void diagonal_residual(const std::vector<double>& z, std::vector<double>& out) const;

    /// True when the tuple keeps the harmonic metric diagonal (q_2 alone or
    /// q_n alone).
    static bool diagonal_compatible(const DifferentialTuple& q);

    /// Holomorphic-frame metric D e^S D.
    MatrixField metric_from_perturbation(const MatrixField& S) const;

    /// Unitary-frame Higgs matrix at node k.
    Eigen::Map<const Eigen::MatrixXcd> unitary_phi(int k) const {
        return {phi_unitary_.data() + static_cast<std::size_t>(k) * n_ * n_, n_, n_};
    }

private:
    // Hermitian form K * (numerator of R) at interior node k, before the trace
    // projection. `K` holds n x n blocks for every node.
    CMat hermitian_part(int k, const std::vector<cd>& K, const CMat& Kinv) const;

    int n_;
    FuchsianBaseline base_;
    MatrixField phi_;
    std::vector<cd> phi_unitary_;
    std::vector<double> phi_abs2_;  // |phi'_{ij}|^2, node-major, row-major n x n
    RVec xdiag_;                    // diagonal of X
    std::vector<double> scale_;     // D_l per node, node-major
};

/// Holomorphic-frame residual (convenience wrapper building a HitchinSystem).
MatrixField residual(const MatrixField& H, const MatrixField& phi, const HyperbolicPatch& patch);

/// Diagonal residual for H = diag(g0^{-(n+1-2l)/2} e^{u_l}); one field per l.
/// Throws AnsatzError unless the tuple is q_2-only or q_n-only.
std::vector<RealField> residual_diagonal(const std::vector<RealField>& u, const DifferentialTuple& q,
                                         const HyperbolicPatch& patch);

// ---------------------------------------------------------------------------

/// The solver unknown: trace-free Hermitian S with H = H~^{1/2} e^S H~^{1/2}.
struct MetricState {
    FuchsianBaseline baseline;
    MatrixField S;

    MatrixField metric() const;
};

enum class SolveMode { full, diagonal };
enum class Termination { converged, max_iterations, nan_detected };

std::string to_string(SolveMode m);
std::string to_string(Termination t);

struct SolveConfig {
    DifferentialTuple q;
    double R = 0.5;
    int N = 64;
    SolveMode mode = SolveMode::full;
    double tol = 1e-8;
    int max_iter = 50;
    int fallback_max_iter = 20000;
    double krylov_rtol = 1e-2;
    int krylov_restart = 60;
    int krylov_max_iter = 600;
    int line_search_max = 30;
    /// Initial fallback step, in units of h^2 min(g0).
    double fallback_tau = 0.5;
    bool precondition = false;
    /// Shift gamma in the preconditioner -(1/4)Lap + gamma g0.
    double precondition_shift = 1.0;

    void validate() const;
};

/// Snapshot taken at every accepted Newton iterate (and the initial guess).
struct IterateRecord {
    double residual = 0;           ///< sup-norm of G
    double trace_defect = 0;       ///< max over nodes of |tr R| / ||R||
    double hermitian_defect = 0;   ///< max over nodes of ||HR - (HR)^dag|| / ||HR||
    double max_det_error = 0;      ///< max |det H - 1|
    int krylov_iterations = 0;
    double step = 0;               ///< accepted line-search length
};

struct SolveReport {
    int newton_iterations = 0;
    int fallback_iterations = 0;
    int residual_evaluations = 0;
    std::vector<double> residual_history;
    std::vector<IterateRecord> iterates;
    double wall_seconds = 0;
    Termination termination = Termination::max_iterations;
    std::string message;

    bool converged() const { return termination == Termination::converged; }
    double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

struct SolveResult {
    MetricState state;
    SolveReport report;
    SolveConfig config;
};

/// Newton-Krylov solve of the Hitchin equation with S = 0 on the boundary.
SolveResult solve(const SolveConfig& config);

/// Residual sup-norm (max over interior nodes of ||G||_F) of a state.
double residual_sup_norm(const HitchinSystem& sys, const MatrixField& S);

}  // namespace hitchin

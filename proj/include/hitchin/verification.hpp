#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hitchin/complex_field.hpp"
#include "hitchin/hitchin_solver.hpp"
#include "hitchin/lie_algebra.hpp"

namespace hitchin {

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0;   ///< worst case seen
    double tolerance = 0;
    long samples = 0;
    std::string detail;
};

/// Both sides of the summation identity behind the sign of the v_k equation.
/// `w(l, j)` (0-based, l < j) stands for ||beta_lj||^2 + ||a_lj||^2; `k` is
/// 1-based.
std::pair<double, double> filtration_sum_sides(const Eigen::MatrixXd& w, int k);

/// Exact identities for 2 <= n <= n_max: triple brackets, [x, e_i] = i e_i,
/// [e_1, e_i] = 0, sum_{l<=k} (n+1-2l)/2 = k(n-k)/2,
/// sum_k k(n-k)/2 = n(n^2-1)/12, and the filtration summation identity on
/// `samples` random nonnegative arrays per (n, k).
std::vector<CheckResult> check_identities(int n_max, int samples = 1000, std::uint64_t seed = 1);

struct AmGmSides {
    double lhs = 0;          ///< sum r_k e^{z_{k+1} - z_k}
    double rhs = 0;          ///< T exp((1/T) sum r_k (z_{k+1} - z_k)), T = n(n^2-1)/12
    double exponent = 0;     ///< (1/T) sum r_k (z_{k+1} - z_k)
    double telescoped = 0;   ///< -(1/T) sum_{k<n} v_k
    bool all_v_nonpositive = false;
};

/// Evaluates the weighted AM-GM chain at a zero-sum vector z.
AmGmSides amgm_sides(const std::vector<double>& z);

CheckResult check_amgm_chain(int n, int samples, std::uint64_t seed = 1);

/// hitchin_invariants(higgs_matrix(q)) against q on random tuples, entries of
/// modulus up to 2; measured value is the worst absolute error.
CheckResult check_fibration_roundtrip(int n, int samples, std::uint64_t seed = 1);

struct SolutionCheckOptions {
    double geometry_tol = 1e-6;  ///< slack on e >= 1 and v_k <= 0
    double residual_tol = 1e-8;
    double vn_tol = 1e-10;
    double trace_tol = 1e-12;
    double hermitian_tol = 1e-10;
};

struct SolutionChecks {
    std::vector<CheckResult> checks;
    /// min(e - 1) and max_{k<n} v_k over nodes with |x|, |y| <= R/3.
    double energy_margin = 0;
    double v_margin = 0;

    bool all_pass() const;
};

/// Post-solve battery. Refuses (throws Error) unless `report` converged.
SolutionChecks check_solution(const MetricState& state, const DifferentialTuple& q, const SolveReport& report,
                              const SolutionCheckOptions& opt = {});

struct VortexResult {
    RealField w;   ///< u_1 - u~_1 of the n = 2 diagonal metric
    bool converged = false;
    int iterations = 0;
    double residual = 0;
};

/// Independent scalar solve for n = 2: with H = diag(h~_1 e^w, h~_2 e^-w),
///   (1/2)(L(e^w) - L(e^-w)) - g0/2 + (g0/2) e^{-2w} - |q_2|^2 e^{2w} / (2 g0) = 0,
/// L(k) = (1/4) Lap k / k - |d_z k|^2 / k^2, w = 0 on the boundary.
/// Semi-implicit damped fixed point with a sparse Cholesky solve per sweep.
VortexResult vortex_oracle_n2(const std::vector<cd>& q2, const HyperbolicPatch& patch, double tol = 1e-12,
                              int max_iter = 2000);

}  // namespace hitchin

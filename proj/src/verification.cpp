#include "hitchin/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "hitchin/errors.hpp"
#include "hitchin/harmonic_geometry.hpp"

namespace hitchin {

namespace {

CheckResult make_check(std::string name, double measured, double tol, long samples, std::string detail = {}) {
    CheckResult c;
    c.name = std::move(name);
    c.measured = measured;
    c.tolerance = tol;
    c.samples = samples;
    c.pass = measured <= tol;
    c.detail = std::move(detail);
    return c;
}

}  // namespace

std::pair<double, double> filtration_sum_sides(const Eigen::MatrixXd& w, int k) {
    const int n = static_cast<int>(w.rows());
    double lhs = 0.0, rhs = 0.0;
    for (int l = 0; l < k; ++l) {
        for (int j = l + 1; j < n; ++j) lhs -= w(l, j);
        for (int j = 0; j < l; ++j) lhs += w(j, l);
        for (int j = k; j < n; ++j) rhs -= w(l, j);
    }
    return {lhs, rhs};
}

std::vector<CheckResult> check_identities(int n_max, int samples, std::uint64_t seed) {
    if (n_max < 2) throw InvalidRankError("check_identities needs n_max >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    long triple_fail = 0, triple_count = 0;
    double float_err = 0.0;
    long weight_fail = 0, weight_count = 0;
    long partial_fail = 0, partial_count = 0;
    long total_fail = 0, total_count = 0;
    double formula_err = 0.0;
    long formula_count = 0;

    for (int n = 2; n <= n_max; ++n) {
        const ExactTriple t = exact_principal_triple(n);
        triple_fail += !(commutator(t.x, t.e1) == t.e1);
        triple_fail += !(commutator(t.x, t.et1) == t.et1 * Rational(-1));
        triple_fail += !(commutator(t.e1, t.et1) == t.x);
        triple_fail += !(t.x.trace().numerator() == 0 && t.e1.trace().numerator() == 0 && t.et1.trace().numerator() == 0);
        triple_count += 4;

        const PrincipalTriple f = principal_triple(n);
        float_err = std::max(float_err, (f.x * f.e1 - f.e1 * f.x - f.e1).cwiseAbs().maxCoeff());
        float_err = std::max(float_err, (f.x * f.et1 - f.et1 * f.x + f.et1).cwiseAbs().maxCoeff());
        float_err = std::max(float_err, (f.e1 * f.et1 - f.et1 * f.e1 - f.x).cwiseAbs().maxCoeff());

        for (int i = 1; i < n; ++i) {
            const RationalMatrix ei = exact_highest_weight_vector(n, i);
            weight_fail += !(commutator(t.x, ei) == ei * Rational(i));
            weight_fail += !commutator(t.e1, ei).is_zero();
            weight_count += 2;
        }

        Rational total(0);
        for (int k = 1; k < n; ++k) {
            Rational s(0);
            for (int l = 1; l <= k; ++l) s += Rational(n + 1 - 2 * l, 2);
            partial_fail += !(s == Rational((n - k) * k, 2));
            ++partial_count;
            total += Rational(k * (n - k), 2);

            for (int s_idx = 0; s_idx < samples; ++s_idx) {
                Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
                for (int a = 0; a < n; ++a)
                    for (int b = a + 1; b < n; ++b) w(a, b) = unif(rng);
                const auto [lhs, rhs] = filtration_sum_sides(w, k);
                formula_err = std::max(formula_err, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
                ++formula_count;
            }
        }
        total_fail += !(total == Rational(n * (n * n - 1), 12));
        ++total_count;
    }

    std::vector<CheckResult> out;
    out.push_back(make_check("triple brackets (exact)", static_cast<double>(triple_fail), 0.0, triple_count,
                             "failing relations"));
    out.push_back(make_check("triple brackets (floating)", float_err, 1e-12, n_max - 1, "max entry error"));
    out.push_back(make_check("highest weight vectors (exact)", static_cast<double>(weight_fail), 0.0, weight_count,
                             "failing relations"));
    out.push_back(make_check("partial sum (n+1-2l)/2 (exact)", static_cast<double>(partial_fail), 0.0, partial_count,
                             "failing (n, k)"));
    out.push_back(make_check("sum k(n-k)/2 = n(n^2-1)/12 (exact)", static_cast<double>(total_fail), 0.0, total_count,
                             "failing n"));
    out.push_back(make_check("filtration summation identity", formula_err, 1e-12, formula_count,
                             "max relative difference"));
    return out;
}

AmGmSides amgm_sides(const std::vector<double>& z) {
    const int n = static_cast<int>(z.size());
    if (n < 2) throw InvalidRankError("amgm_sides needs at least two entries");
    const double T = n * (n * n - 1.0) / 12.0;
    AmGmSides s;
    double weighted = 0.0, vsum = 0.0, v = 0.0;
    s.all_v_nonpositive = true;
    for (int k = 1; k < n; ++k) {
        const double r = k * (n - k) / 2.0;
        const double d = z[k] - z[k - 1];
        s.lhs += r * std::exp(d);
        weighted += r * d;
        v += z[k - 1];
        vsum += v;
        if (v > 0.0) s.all_v_nonpositive = false;
    }
    s.exponent = weighted / T;
    s.rhs = T * std::exp(s.exponent);
    s.telescoped = -vsum / T;
    return s;
}

CheckResult check_amgm_chain(int n, int samples, std::uint64_t seed) {
    if (n < 2) throw InvalidRankError("check_amgm_chain needs n >= 2");
    const double tol = 1e-10;
    const double T = n * (n * n - 1.0) / 12.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    long violations = 0;
    std::vector<double> z(n);
    for (int s = 0; s < samples; ++s) {
        double mean = 0.0;
        for (double& x : z) {
            x = normal(rng);
            mean += x;
        }
        mean /= n;
        for (double& x : z) x -= mean;
        // Every other sample is sorted ascending so that all v_k <= 0.
        if (s % 2 == 1) std::sort(z.begin(), z.end());
        const AmGmSides a = amgm_sides(z);
        const double scale = std::max(1.0, std::abs(a.rhs));
        double bad = std::max(0.0, (a.rhs - a.lhs) / scale);
        bad = std::max(bad, std::abs(a.exponent - a.telescoped) / std::max(1.0, std::abs(a.exponent)));
        if (a.all_v_nonpositive) bad = std::max(bad, (T - a.rhs) / T);
        worst = std::max(worst, bad);
        violations += bad > tol;
    }
    return make_check(fmt::format("AM-GM chain n={}", n), worst, tol, samples,
                      fmt::format("{} violations", violations));
}

CheckResult check_fibration_roundtrip(int n, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double worst = 0.0;
    std::vector<cd> q(n - 1);
    for (int s = 0; s < samples; ++s) {
        for (cd& v : q) v = cd(unif(rng), unif(rng)) * std::sqrt(2.0);
        const std::vector<cd> back = hitchin_invariants(higgs_matrix_from_values(n, q));
        for (int j = 0; j < n - 1; ++j) worst = std::max(worst, std::abs(back[j] - q[j]));
    }
    return make_check(fmt::format("fibration round-trip n={}", n), worst, 1e-10, samples, "max abs error");
}

bool SolutionChecks::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

SolutionChecks check_solution(const MetricState& state, const DifferentialTuple& q, const SolveReport& report,
                              const SolutionCheckOptions& opt) {
    if (!report.converged())
        throw Error("check_solution: refusing a state whose solve did not converge (" + to_string(report.termination) +
                    ")");
    const HyperbolicPatch& patch = state.baseline.patch;
    const int n = state.baseline.n;
    if (q.rank() != n) throw ShapeError("check_solution: tuple rank differs from the state rank");

    const MatrixField phi = assemble_phi(q, patch);
    const HitchinSystem sys(phi, state.baseline);
    const MatrixField H = sys.metric_from_perturbation(state.S);
    const SplittingData split = splitting_metrics(H);
    const GeometryReport geo = pullback_and_hopf(phi, H, patch);

    SolutionChecks out;
    double vn = 0.0, vmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < patch.size(); ++k) {
        vn = std::max(vn, std::abs(split.v[n - 1].values[k]));
        for (int l = 0; l < n - 1; ++l) vmax = std::max(vmax, split.v[l].values[k]);
    }
    out.checks.push_back(make_check("v_n = 0", vn, opt.vn_tol, patch.size()));
    out.checks.push_back(make_check("v_k <= 0", vmax, opt.geometry_tol, static_cast<long>(patch.size()) * (n - 1),
                                    "max v_k over all nodes"));
    out.checks.push_back(make_check("e(f) >= 1", 1.0 - geo.interior_energy_min, opt.geometry_tol,
                                    static_cast<long>(patch.interior().size()), "1 - min interior e(f)"));
    out.checks.push_back(make_check("residual", residual_sup_norm(sys, state.S), opt.residual_tol,
                                    static_cast<long>(patch.interior().size()), "interior sup-norm"));

    const MatrixField R = sys.residual(H);
    double trace_defect = 0.0, herm_defect = 0.0;
    for (int k : patch.interior()) {
        const CMat r = R.at(k);
        const double rn = r.norm();
        if (rn > 0.0) trace_defect = std::max(trace_defect, std::abs(r.trace()) / rn);
        const CMat hr = CMat(H.at(k)) * r;
        const double hn = hr.norm();
        if (hn > 0.0) herm_defect = std::max(herm_defect, (hr - hr.adjoint()).norm() / hn);
    }
    out.checks.push_back(make_check("residual trace", trace_defect, opt.trace_tol,
                                    static_cast<long>(patch.interior().size()), "max |tr R| / ||R||"));
    out.checks.push_back(make_check("residual H-self-adjoint", herm_defect, opt.hermitian_tol,
                                    static_cast<long>(patch.interior().size()), "max ||HR - (HR)^*|| / ||HR||"));

    // The Hopf coefficient is 2 q_2; the centered d_zbar of a holomorphic f
    // errs by about h^2 f''' / 6.
    const double h = patch.spacing();
    const double rho = std::sqrt(2.0) * patch.half_width();
    const auto& a = q.coefficients(2);
    double third = 0.0;
    for (std::size_t m = 3; m < a.size(); ++m)
        third += 2.0 * std::abs(a[m]) * m * (m - 1.0) * (m - 2.0) * std::pow(rho, m - 3.0);
    double fmax = 0.0;
    for (const cd& v : geo.hopf.values) fmax = std::max(fmax, std::abs(v));
    const double hopf_tol = h * h * third + 1e-12 + 8.0 * std::numeric_limits<double>::epsilon() * fmax / h;
    out.checks.push_back(make_check("Hopf holomorphy", geo.hopf_dbar_sup, hopf_tol,
                                    static_cast<long>(patch.interior().size()), "sup |d_zbar Hopf|"));

    const double third_w = patch.half_width() / 3.0 + 1e-12;
    out.energy_margin = std::numeric_limits<double>::infinity();
    out.v_margin = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < patch.size(); ++k) {
        const cd z = patch.node(k);
        if (std::abs(z.real()) > third_w || std::abs(z.imag()) > third_w) continue;
        out.energy_margin = std::min(out.energy_margin, geo.energy.values[k] - 1.0);
        for (int l = 0; l < n - 1; ++l) out.v_margin = std::max(out.v_margin, split.v[l].values[k]);
    }
    return out;
}

VortexResult vortex_oracle_n2(const std::vector<cd>& q2, const HyperbolicPatch& patch, double tol, int max_iter) {
    const int N = patch.nodes_per_side();
    const double h = patch.spacing();
    const auto& interior = patch.interior();
    const int m = static_cast<int>(interior.size());
    std::vector<int> pos(patch.size(), -1);
    for (int i = 0; i < m; ++i) pos[interior[i]] = i;

    std::vector<double> q_abs2(patch.size());
    for (int k = 0; k < patch.size(); ++k) {
        cd acc = 0.0;
        for (auto it = q2.rbegin(); it != q2.rend(); ++it) acc = acc * patch.node(k) + *it;
        q_abs2[k] = std::norm(acc);
    }

    VortexResult res;
    res.w = RealField(patch);
    std::vector<double>& w = res.w.values;

    const double lap_c = 0.25 / (h * h);
    const double grad_c = 1.0 / (16.0 * h * h);
    auto L = [&](const std::vector<double>& kv, int k) {
        const double ke = kv[k + 1], kw = kv[k - 1], kn = kv[k + N], ks = kv[k - N], kc = kv[k];
        const double lap = (ke + kw + kn + ks - 4.0 * kc) * lap_c;
        const double grad = ((ke - kw) * (ke - kw) + (kn - ks) * (kn - ks)) * grad_c;
        return lap / kc - grad / (kc * kc);
    };
    std::vector<double> kp(patch.size()), km(patch.size());
    // g0 times the residual at interior nodes; returns the sup of the residual itself.
    auto eval = [&](const std::vector<double>& wv, Eigen::VectorXd& F) {
        for (int k = 0; k < patch.size(); ++k) {
            kp[k] = std::exp(wv[k]);
            km[k] = std::exp(-wv[k]);
        }
        double sup = 0.0;
        for (int i = 0; i < m; ++i) {
            const int k = interior[i];
            const double g0 = patch.density(k);
            const double e2 = kp[k] * kp[k];
            F[i] = 0.5 * (L(kp, k) - L(km, k)) - 0.5 * g0 + 0.5 * g0 / e2 - q_abs2[k] * e2 / (2.0 * g0);
            sup = std::max(sup, std::abs(F[i] / g0));
        }
        return sup;
    };

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::SparseMatrix<double> A(m, m);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::VectorXd F(m), Ft(m);
    std::vector<double> wt(w.size());
    double sup = eval(w, F);
    bool analyzed = false;
    for (res.iterations = 0; res.iterations < max_iter && sup >= tol; ++res.iterations) {
        if (!std::isfinite(sup)) break;
        trip.clear();
        for (int i = 0; i < m; ++i) {
            const int k = interior[i];
            const double g0 = patch.density(k);
            const double e2 = std::exp(2.0 * w[k]);
            // Zero-order part of the linearization, frozen at the current iterate.
            trip.emplace_back(i, i, 4.0 * lap_c + g0 / e2 + q_abs2[k] * e2 / g0);
            for (int nb : {k + 1, k - 1, k + N, k - N})
                if (pos[nb] >= 0) trip.emplace_back(i, pos[nb], -lap_c);
        }
        A.setFromTriplets(trip.begin(), trip.end());
        if (!analyzed) {
            ldlt.analyzePattern(A);
            analyzed = true;
        }
        ldlt.factorize(A);
        const Eigen::VectorXd delta = ldlt.solve(F);
        double theta = 1.0;
        bool moved = false;
        for (int t = 0; t < 30; ++t, theta *= 0.5) {
            wt = w;
            for (int i = 0; i < m; ++i) wt[interior[i]] += theta * delta[i];
            const double st = eval(wt, Ft);
            if (std::isfinite(st) && st < sup) {
                w.swap(wt);
                F = Ft;
                sup = st;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    res.residual = sup;
    res.converged = sup < tol;
    return res;
}

}  // namespace hitchin

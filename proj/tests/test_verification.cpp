#include <doctest.h>

#include <cmath>

#include "hitchin/errors.hpp"
#include "hitchin/hitchin_solver.hpp"
#include "hitchin/verification.hpp"

using namespace hitchin;

TEST_CASE("identity suite passes up to n = 10") {
    const auto checks = check_identities(10, 200);
    REQUIRE(checks.size() == 6);
    for (const auto& c : checks) {
        CAPTURE(c.name);
        CHECK(c.pass);
        CHECK(c.samples > 0);
        CHECK(c.measured <= c.tolerance);
    }
    CHECK_THROWS_AS(check_identities(1), InvalidRankError);
}

TEST_CASE("filtration identity by hand") {
    // n = 3, k = 1, every w_lj = 1: the sums over l <= 1 < j give -2 on both sides
    const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(3, 3);
    const auto [lhs, rhs] = filtration_sum_sides(w, 1);
    CHECK(lhs == doctest::Approx(-2.0));
    CHECK(rhs == doctest::Approx(-2.0));
}

TEST_CASE("AM-GM chain at hand-picked points") {
    SUBCASE("z = 0 is the equality case") {
        for (int n = 2; n <= 6; ++n) {
            const AmGmSides s = amgm_sides(std::vector<double>(n, 0.0));
            const double T = n * (n * n - 1) / 12.0;
            CHECK(s.lhs == doctest::Approx(T));
            CHECK(s.rhs == doctest::Approx(T));
            CHECK(s.exponent == doctest::Approx(0.0));
            CHECK(s.all_v_nonpositive);
        }
    }
    SUBCASE("n = 3, z = (-1, 0, 1)") {
        const AmGmSides s = amgm_sides({-1.0, 0.0, 1.0});
        CHECK(s.lhs == doctest::Approx(2.0 * std::exp(1.0)));
        CHECK(s.rhs == doctest::Approx(2.0 * std::exp(1.0)));
        CHECK(s.exponent == doctest::Approx(1.0));
        CHECK(s.telescoped == doctest::Approx(s.exponent));
        CHECK(s.all_v_nonpositive);
    }
    SUBCASE("n = 3, z = (1, 0, -1)") {
        const AmGmSides s = amgm_sides({1.0, 0.0, -1.0});
        CHECK(s.exponent == doctest::Approx(-1.0));
        CHECK(s.lhs == doctest::Approx(2.0 * std::exp(-1.0)));
        CHECK_FALSE(s.all_v_nonpositive);
    }
    SUBCASE("unequal gaps give strict inequality") {
        const AmGmSides s = amgm_sides({0.5, 0.1, -0.6});
        CHECK(s.lhs > s.rhs);
    }
}

TEST_CASE("randomized AM-GM and fibration checks") {
    for (int n = 2; n <= 6; ++n) {
        CAPTURE(n);
        const CheckResult a = check_amgm_chain(n, 10000);
        CHECK(a.pass);
        CHECK(a.samples == 10000);
        const CheckResult f = check_fibration_roundtrip(n, 300);
        CHECK(f.pass);
        CHECK(f.measured < 1e-10);
    }
}

TEST_CASE("solution checks on the Fuchsian baseline") {
    const HyperbolicPatch p = make_patch(0.5, 24);
    for (int n = 2; n <= 4; ++n) {
        CAPTURE(n);
        MetricState state{fuchsian_baseline(n, p), MatrixField(p, n)};
        SolveReport rep;
        rep.termination = Termination::converged;
        const SolutionChecks c = check_solution(state, DifferentialTuple::zero(n), rep);
        for (const auto& r : c.checks) {
            CAPTURE(r.name);
            CHECK(r.pass);
        }
        CHECK(std::abs(c.energy_margin) < 1e-10);
        CHECK(std::abs(c.v_margin) < 1e-10);

        rep.termination = Termination::max_iterations;
        CHECK_THROWS_AS(check_solution(state, DifferentialTuple::zero(n), rep), Error);
    }
}

TEST_CASE("solution checks reject a perturbed metric") {
    SolveConfig cfg;
    cfg.q = DifferentialTuple(2, {{0.3}});
    cfg.N = 24;
    SolveResult r = solve(cfg);
    REQUIRE(r.report.converged());
    CHECK(check_solution(r.state, cfg.q, r.report).all_pass());

    MetricState doubled = r.state;
    for (int k = 0; k < doubled.S.size(); ++k) doubled.S.at(k) *= 2.0;
    const SolutionChecks c = check_solution(doubled, cfg.q, r.report);
    CHECK_FALSE(c.all_pass());
    bool residual_failed = false;
    for (const auto& x : c.checks)
        if (x.name == "residual") residual_failed = !x.pass;
    CHECK(residual_failed);

    CHECK_THROWS_AS(check_solution(r.state, DifferentialTuple::zero(3), r.report), ShapeError);
}

TEST_CASE("vortex oracle") {
    const HyperbolicPatch p = make_patch(0.5, 32);
    SUBCASE("q = 0 gives w = 0") {
        const VortexResult v = vortex_oracle_n2({}, p);
        CHECK(v.converged);
        for (double x : v.w.values) CHECK(std::abs(x) < 1e-14);
    }
    SUBCASE("agrees with the diagonal residual") {
        const VortexResult v = vortex_oracle_n2({0.3, cd(0.0, 0.2)}, p);
        REQUIRE(v.converged);
        CHECK(v.residual < 1e-12);
        const auto base = fuchsian_baseline(2, p);
        std::vector<RealField> u(2, RealField(p));
        for (int k = 0; k < p.size(); ++k) {
            u[0].values[k] = base.u_tilde[0] + v.w.values[k];
            u[1].values[k] = base.u_tilde[1] - v.w.values[k];
        }
        const auto res = residual_diagonal(u, DifferentialTuple(2, {{0.3, cd(0.0, 0.2)}}), p);
        double worst = 0.0;
        for (int k : p.interior()) worst = std::max({worst, std::abs(res[0].values[k]), std::abs(res[1].values[k])});
        CHECK(worst < 1e-9);
        // a wrong w is visible
        for (int k : p.interior()) {
            u[0].values[k] += 1e-3;
            u[1].values[k] -= 1e-3;
        }
        const auto off = residual_diagonal(u, DifferentialTuple(2, {{0.3, cd(0.0, 0.2)}}), p);
        double big = 0.0;
        for (int k : p.interior()) big = std::max(big, std::abs(off[0].values[k]));
        CHECK(big > 1e-5);
    }
}

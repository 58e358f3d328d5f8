#include <doctest.h>

#include <cmath>
#include <random>

#include "hitchin/newton_krylov.hpp"

using namespace hitchin;

namespace {

LinearOperator dense(const Eigen::MatrixXd& A) {
    return [A](const Eigen::VectorXd& v, Eigen::VectorXd& out) { out = A * v; };
}

// F_i(x) = x_i^3 + sum_j B_ij x_j - c_i
class Cubic final : public NonlinearSystem {
public:
    Cubic(Eigen::MatrixXd B, Eigen::VectorXd c) : B_(std::move(B)), c_(std::move(c)) {}
    int dimension() const override { return static_cast<int>(c_.size()); }
    double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& F) override {
        F = x.array().cube().matrix() + B_ * x - c_;
        return F.cwiseAbs().maxCoeff();
    }
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd J = B_;
        J.diagonal() += 3.0 * x.array().square().matrix();
        return J;
    }

private:
    Eigen::MatrixXd B_;
    Eigen::VectorXd c_;
};

}  // namespace

TEST_CASE("GMRES solves a nonsymmetric system") {
    std::mt19937 rng(1);
    std::normal_distribution<double> g;
    const int m = 40;
    Eigen::MatrixXd A = 4.0 * Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) A(i, j) += 0.3 * g(rng) / std::sqrt(m);
    Eigen::VectorXd xs(m);
    for (int i = 0; i < m; ++i) xs(i) = g(rng);
    const Eigen::VectorXd b = A * xs;
    Eigen::VectorXd x;
    const GmresResult r = gmres(dense(A), b, x, {1e-12, 50, 500});
    CHECK(r.converged);
    CHECK((A * x - b).norm() <= 1.01e-12 * b.norm());
    CHECK((x - xs).norm() < 1e-10 * xs.norm());
}

TEST_CASE("restarted GMRES reaches the tolerance on a Laplacian") {
    const int m = 60;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        A(i, i) = 2.0;
        if (i > 0) A(i, i - 1) = -1.0;
        if (i + 1 < m) A(i, i + 1) = -1.0;
    }
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd x;
    const GmresResult r = gmres(dense(A), b, x, {1e-8, 10, 5000});
    CHECK(r.converged);
    CHECK(r.iterations > 10);
    CHECK((A * x - b).norm() <= 1e-8 * b.norm() * 1.01);
}

TEST_CASE("right preconditioning with the exact inverse converges at once") {
    const int m = 30;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        A(i, i) = 2.0 + i;
        if (i + 1 < m) A(i, i + 1) = 0.5;
    }
    const Eigen::MatrixXd Ainv = A.inverse();
    const LinearOperator M = dense(Ainv);
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(m, -1.0, 1.0);
    Eigen::VectorXd x;
    const GmresResult r = gmres(dense(A), b, x, {1e-10, 20, 100}, &M);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
    CHECK((A * x - b).norm() < 1e-10 * b.norm());
}

TEST_CASE("zero right-hand side") {
    Eigen::VectorXd x;
    const GmresResult r = gmres(dense(Eigen::MatrixXd::Identity(5, 5)), Eigen::VectorXd::Zero(5), x, {});
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(x.norm() == 0.0);
}

TEST_CASE("iteration cap reports non-convergence") {
    const int m = 50;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        A(i, i) = 2.0;
        if (i > 0) A(i, i - 1) = -1.0;
        if (i + 1 < m) A(i, i + 1) = -1.0;
    }
    Eigen::VectorXd x;
    const GmresResult r = gmres(dense(A), Eigen::VectorXd::Ones(m), x, {1e-12, 5, 7});
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 7);
    CHECK(r.relative_residual < 1.0);
}

TEST_CASE("finite-difference Jacobian matches the analytic one") {
    const int m = 6;
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(m, m);
    B(0, 3) = 0.5;
    B(4, 1) = -0.7;
    Cubic sys(B, Eigen::VectorXd::Ones(m));
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(m, -0.5, 1.5), F;
    sys.evaluate(x, F);
    FiniteDifferenceJacobian J(sys, x, F);
    const Eigen::MatrixXd Ja = sys.jacobian(x);
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(m, j) * 3.0, out;
        J.apply(e, out);
        CHECK((out - Ja * e).norm() < 1e-6);
    }
    CHECK(J.evaluations() == m);
}

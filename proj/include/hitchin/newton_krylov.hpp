#pragma once

#include <functional>

#include <Eigen/Dense>

namespace hitchin {

using LinearOperator = std::function<void(const Eigen::VectorXd& in, Eigen::VectorXd& out)>;

struct GmresOptions {
    double rtol = 1e-2;
    int restart = 60;
    int max_iter = 600;
};

struct GmresResult {
    int iterations = 0;
    double relative_residual = 1.0;
    bool converged = false;
};

/// Restarted GMRES with optional right preconditioning, x0 = 0.
/// Stops once ||b - A x|| <= rtol ||b||.
GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const GmresOptions& opt,
                  const LinearOperator* right_preconditioner = nullptr);

/// Nonlinear map F: R^m -> R^m driven by the Newton-Krylov loop.
class NonlinearSystem {
public:
    virtual ~NonlinearSystem() = default;
    virtual int dimension() const = 0;
    /// Fills F(x) and returns the convergence norm of F.
    virtual double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& F) = 0;
};

/// Jacobian-vector product by a forward difference of F along v.
class FiniteDifferenceJacobian {
public:
    FiniteDifferenceJacobian(NonlinearSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& Fx)
        : sys_(sys), x_(x), Fx_(Fx), trial_(x.size()), Ft_(x.size()) {}

    void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out);
    int evaluations() const { return evaluations_; }

private:
    NonlinearSystem& sys_;
    const Eigen::VectorXd& x_;
    const Eigen::VectorXd& Fx_;
    Eigen::VectorXd trial_;
    Eigen::VectorXd Ft_;
    int evaluations_ = 0;
};

}  // namespace hitchin

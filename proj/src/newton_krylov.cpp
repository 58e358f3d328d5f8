#include "hitchin/newton_krylov.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace hitchin {

GmresResult gmres(const LinearOperator& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, const GmresOptions& opt,
                  const LinearOperator* M) {
    const Eigen::Index m = b.size();
    x = Eigen::VectorXd::Zero(m);
    GmresResult res;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.converged = true;
        res.relative_residual = 0.0;
        return res;
    }
    const double target = opt.rtol * bnorm;
    const int restart = std::max(1, opt.restart);

    std::vector<Eigen::VectorXd> V(restart + 1), Z(M ? restart : 0);
    Eigen::MatrixXd Hm = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd cs(restart), sn(restart), g(restart + 1);
    Eigen::VectorXd r = b, w(m), tmp(m);

    double rnorm = bnorm;
    while (res.iterations < opt.max_iter) {
        V[0] = r / rnorm;
        g.setZero();
        g(0) = rnorm;
        Hm.setZero();
        int j = 0;
        double estimate = rnorm;
        for (; j < restart && res.iterations < opt.max_iter; ++j) {
            ++res.iterations;
            if (M) {
                (*M)(V[j], tmp);
                Z[j] = tmp;
                A(Z[j], w);
            } else {
                A(V[j], w);
            }
            for (int i = 0; i <= j; ++i) {
                Hm(i, j) = w.dot(V[i]);
                w -= Hm(i, j) * V[i];
            }
            Hm(j + 1, j) = w.norm();
            const bool breakdown = Hm(j + 1, j) <= std::numeric_limits<double>::min();
            if (!breakdown) V[j + 1] = w / Hm(j + 1, j);

            for (int i = 0; i < j; ++i) {
                const double t = cs(i) * Hm(i, j) + sn(i) * Hm(i + 1, j);
                Hm(i + 1, j) = -sn(i) * Hm(i, j) + cs(i) * Hm(i + 1, j);
                Hm(i, j) = t;
            }
            const double denom = std::hypot(Hm(j, j), Hm(j + 1, j));
            cs(j) = denom == 0.0 ? 1.0 : Hm(j, j) / denom;
            sn(j) = denom == 0.0 ? 0.0 : Hm(j + 1, j) / denom;
            Hm(j, j) = denom;
            Hm(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);
            estimate = std::abs(g(j + 1));
            if (estimate <= target || breakdown) {
                ++j;
                break;
            }
        }
        // Back substitution on the j x j triangle.
        Eigen::VectorXd y = Hm.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        for (int i = 0; i < j; ++i) x += y(i) * (M ? Z[i] : V[i]);

        if (estimate <= target) {
            res.converged = true;
            res.relative_residual = estimate / bnorm;
            break;
        }
        A(x, w);
        r = b - w;
        rnorm = r.norm();
        res.relative_residual = rnorm / bnorm;
        if (rnorm <= target) {
            res.converged = true;
            break;
        }
        if (rnorm == 0.0) break;
    }
    return res;
}

void FiniteDifferenceJacobian::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    const double vnorm = v.norm();
    if (vnorm == 0.0) {
        out = Eigen::VectorXd::Zero(v.size());
        return;
    }
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon() * (1.0 + x_.norm())) / vnorm;
    trial_ = x_ + eps * v;
    sys_.evaluate(trial_, Ft_);
    ++evaluations_;
    out = (Ft_ - Fx_) / eps;
}

}  // namespace hitchin

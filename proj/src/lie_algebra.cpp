#include "hitchin/lie_algebra.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "hitchin/errors.hpp"

namespace hitchin {

RationalMatrix RationalMatrix::operator*(const RationalMatrix& o) const {
    if (n_ != o.n_) throw ShapeError("RationalMatrix product: size mismatch");
    RationalMatrix out(n_);
    for (int i = 0; i < n_; ++i)
        for (int k = 0; k < n_; ++k) {
            const Rational& aik = (*this)(i, k);
            if (aik.numerator() == 0) continue;
            for (int j = 0; j < n_; ++j) out(i, j) += aik * o(k, j);
        }
    return out;
}

RationalMatrix RationalMatrix::operator+(const RationalMatrix& o) const {
    if (n_ != o.n_) throw ShapeError("RationalMatrix sum: size mismatch");
    RationalMatrix out(n_);
    for (std::size_t k = 0; k < a_.size(); ++k) out.a_[k] = a_[k] + o.a_[k];
    return out;
}

RationalMatrix RationalMatrix::operator-(const RationalMatrix& o) const {
    if (n_ != o.n_) throw ShapeError("RationalMatrix difference: size mismatch");
    RationalMatrix out(n_);
    for (std::size_t k = 0; k < a_.size(); ++k) out.a_[k] = a_[k] - o.a_[k];
    return out;
}

RationalMatrix RationalMatrix::operator*(const Rational& s) const {
    RationalMatrix out(n_);
    for (std::size_t k = 0; k < a_.size(); ++k) out.a_[k] = a_[k] * s;
    return out;
}

Rational RationalMatrix::trace() const {
    Rational t(0);
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

bool RationalMatrix::is_zero() const {
    for (const auto& v : a_)
        if (v.numerator() != 0) return false;
    return true;
}

Eigen::MatrixXd RationalMatrix::to_double() const {
    Eigen::MatrixXd m(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m(i, j) = boost::rational_cast<double>((*this)(i, j));
    return m;
}

RationalMatrix commutator(const RationalMatrix& a, const RationalMatrix& b) { return a * b - b * a; }

namespace {

void require_rank(int n) {
    if (n < 2) throw InvalidRankError("rank must be >= 2, got " + std::to_string(n));
}

void require_weight(int n, int i) {
    if (i < 1 || i > n - 1)
        throw IndexError("highest weight index " + std::to_string(i) + " outside 1.." + std::to_string(n - 1));
}

}  // namespace

std::vector<Rational> principal_coefficients(int n) {
    require_rank(n);
    std::vector<Rational> r;
    r.reserve(n - 1);
    for (int i = 1; i <= n - 1; ++i) r.emplace_back(i * (n - i), 2);
    return r;
}

PrincipalTriple principal_triple(int n) {
    require_rank(n);
    PrincipalTriple t;
    t.n = n;
    t.r = principal_coefficients(n);
    t.x = Eigen::MatrixXd::Zero(n, n);
    t.e1 = Eigen::MatrixXd::Zero(n, n);
    t.et1 = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) t.x(k, k) = 0.5 * (n - 1 - 2 * k);
    for (int i = 0; i < n - 1; ++i) {
        const double s = std::sqrt(boost::rational_cast<double>(t.r[i]));
        t.e1(i, i + 1) = s;
        t.et1(i + 1, i) = s;
    }
    return t;
}

ExactTriple exact_principal_triple(int n) {
    const auto r = principal_coefficients(n);
    ExactTriple t{RationalMatrix(n), RationalMatrix(n), RationalMatrix(n)};
    for (int k = 0; k < n; ++k) t.x(k, k) = Rational(n - 1 - 2 * k, 2);
    for (int i = 0; i < n - 1; ++i) {
        t.e1(i, i + 1) = r[i];
        t.et1(i + 1, i) = 1;
    }
    return t;
}

Eigen::MatrixXd highest_weight_vector(int n, int i) {
    require_rank(n);
    require_weight(n, i);
    const auto r = principal_coefficients(n);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n - i; ++k) {
        double prod = 1.0;
        for (int j = k; j < k + i; ++j) prod *= boost::rational_cast<double>(r[j]);
        e(k, k + i) = std::sqrt(prod);
    }
    return e;
}

RationalMatrix exact_highest_weight_vector(int n, int i) {
    require_rank(n);
    require_weight(n, i);
    const auto r = principal_coefficients(n);
    RationalMatrix e(n);
    for (int k = 0; k < n - i; ++k) {
        Rational prod(1);
        for (int j = k; j < k + i; ++j) prod *= r[j];
        e(k, k + i) = prod;
    }
    return e;
}

// ---------------------------------------------------------------------------

DifferentialTuple::DifferentialTuple(int n, std::vector<std::vector<cd>> polys) : n_(n), polys_(std::move(polys)) {
    require_rank(n);
    if (static_cast<int>(polys_.size()) != n - 1)
        throw ShapeError("differential tuple of rank " + std::to_string(n) + " needs " + std::to_string(n - 1) +
                         " polynomials, got " + std::to_string(polys_.size()));
}

DifferentialTuple DifferentialTuple::zero(int n) {
    require_rank(n);
    return DifferentialTuple(n, std::vector<std::vector<cd>>(n - 1));
}

const std::vector<cd>& DifferentialTuple::coefficients(int j) const {
    if (j < 2 || j > n_) throw IndexError("differential degree " + std::to_string(j) + " out of range");
    return polys_[j - 2];
}

void DifferentialTuple::set(int j, std::vector<cd> coeffs) {
    if (j < 2 || j > n_) throw IndexError("differential degree " + std::to_string(j) + " out of range");
    polys_[j - 2] = std::move(coeffs);
}

cd DifferentialTuple::eval(int j, cd z) const {
    const auto& c = coefficients(j);
    cd acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
    return acc;
}

std::vector<cd> DifferentialTuple::eval_all(cd z) const {
    std::vector<cd> v(n_ - 1);
    for (int j = 2; j <= n_; ++j) v[j - 2] = eval(j, z);
    return v;
}

bool DifferentialTuple::is_zero(int j) const {
    for (const auto& c : coefficients(j))
        if (c != cd(0.0)) return false;
    return true;
}

Eigen::MatrixXcd higgs_matrix_from_values(int n, const std::vector<cd>& q) {
    require_rank(n);
    if (static_cast<int>(q.size()) != n - 1) throw ShapeError("higgs_matrix: expected n-1 differential values");
    const auto r = principal_coefficients(n);
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) phi(k + 1, k) = 1.0;
    for (int j = 2; j <= n; ++j) {
        const cd qj = q[j - 2];
        if (qj == cd(0.0)) continue;
        for (int k = 0; k + j - 1 < n; ++k) {
            // prod_{i=k}^{k+j-2} r_i in 1-based indices
            Rational prod(1);
            for (int i = k; i <= k + j - 2; ++i) prod *= r[i];
            phi(k, k + j - 1) = boost::rational_cast<double>(prod) * qj;
        }
    }
    return phi;
}

Eigen::MatrixXcd higgs_matrix(const DifferentialTuple& q, cd z) { return higgs_matrix_from_values(q.rank(), q.eval_all(z)); }

std::vector<cd> characteristic_coefficients(const Eigen::MatrixXcd& a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw ShapeError("characteristic polynomial of a non-square matrix");
    Eigen::MatrixXcd h = a;
    if (n > 2) h = Eigen::HessenbergDecomposition<Eigen::MatrixXcd>(a).matrixH();

    // p[k] holds det(lambda - H_k) for the leading k x k block, ascending powers.
    std::vector<std::vector<cd>> p(n + 1);
    p[0] = {cd(1.0)};
    for (int k = 1; k <= n; ++k) {
        std::vector<cd> next(k + 1, cd(0.0));
        const auto& prev = p[k - 1];
        for (int d = 0; d < k; ++d) {
            next[d + 1] += prev[d];
            next[d] -= h(k - 1, k - 1) * prev[d];
        }
        cd sub = 1.0;
        for (int i = k - 1; i >= 1; --i) {
            sub *= h(i, i - 1);
            const cd coef = h(i - 1, k - 1) * sub;
            const auto& pi = p[i - 1];
            for (std::size_t d = 0; d < pi.size(); ++d) next[d] -= coef * pi[d];
        }
        p[k] = std::move(next);
    }
    // Descending order: c_k multiplies lambda^{n-k}.
    std::vector<cd> c(n + 1);
    for (int k = 0; k <= n; ++k) c[k] = p[n][n - k];
    return c;
}

std::vector<cd> hitchin_invariants(const Eigen::MatrixXcd& phi) {
    const int n = static_cast<int>(phi.rows());
    if (phi.cols() != n) throw ShapeError("hitchin_invariants: matrix not square");
    require_rank(n);
    const double scale = std::max(1.0, phi.norm());
    if (std::abs(phi.trace()) > 1e-10 * scale) throw ShapeError("hitchin_invariants: matrix is not trace-free");

    const auto target = characteristic_coefficients(phi);
    std::vector<cd> q(n - 1, cd(0.0));
    // c_k is affine in q_k with the lower q's fixed; higher q's do not enter
    // (weighted homogeneity), so solve one degree at a time.
    for (int k = 2; k <= n; ++k) {
        std::vector<cd> unit(n - 1, cd(0.0));
        unit[k - 2] = 1.0;
        const cd slope = characteristic_coefficients(higgs_matrix_from_values(n, unit))[k];
        const cd offset = characteristic_coefficients(higgs_matrix_from_values(n, q))[k];
        q[k - 2] = (target[k] - offset) / slope;
    }
    return q;
}

}  // namespace hitchin

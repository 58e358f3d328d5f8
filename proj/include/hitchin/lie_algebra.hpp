#pragma once

#include <cstdint>
#include <vector>

#include <boost/rational.hpp>
#include <Eigen/Dense>

#include "hitchin/types.hpp"

namespace hitchin {

using Rational = boost::rational<std::int64_t>;

/// Dense square matrix over the rationals. Only what the bracket identities
/// need: products, sums, scaling, equality.
class RationalMatrix {
public:
    explicit RationalMatrix(int n = 0) : n_(n), a_(static_cast<std::size_t>(n) * n, Rational(0)) {}

    int size() const noexcept { return n_; }
    Rational& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    const Rational& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

    RationalMatrix operator*(const RationalMatrix& o) const;
    RationalMatrix operator+(const RationalMatrix& o) const;
    RationalMatrix operator-(const RationalMatrix& o) const;
    RationalMatrix operator*(const Rational& s) const;
    bool operator==(const RationalMatrix& o) const { return n_ == o.n_ && a_ == o.a_; }

    Rational trace() const;
    bool is_zero() const;
    Eigen::MatrixXd to_double() const;

private:
    int n_;
    std::vector<Rational> a_;
};

/// [a, b] = ab - ba
RationalMatrix commutator(const RationalMatrix& a, const RationalMatrix& b);

/// r_i = i(n-i)/2 for i = 1..n-1 (returned 0-based: r[0] = r_1).
std::vector<Rational> principal_coefficients(int n);

/// Principal sl(2)-triple of sl(n). `x` is diagonal, `e1` superdiagonal with
/// entries sqrt(r_i), `et1` its transpose.
struct PrincipalTriple {
    int n = 0;
    Eigen::MatrixXd x;
    Eigen::MatrixXd e1;
    Eigen::MatrixXd et1;
    std::vector<Rational> r;
};

/// The same triple conjugated by g = diag(1, sqrt r_1, sqrt(r_1 r_2), ...).
/// Conjugation preserves brackets and makes every entry rational:
/// e1 -> sum r_i E_{i,i+1}, et1 -> sum E_{i+1,i}, x unchanged.
struct ExactTriple {
    RationalMatrix x;
    RationalMatrix e1;
    RationalMatrix et1;
};

PrincipalTriple principal_triple(int n);
ExactTriple exact_principal_triple(int n);

/// e_i = sum_k (prod_{j=k}^{k+i-1} sqrt r_j) E_{k,k+i}; eigenvector of ad(x)
/// with eigenvalue i, annihilated by ad(e1).
Eigen::MatrixXd highest_weight_vector(int n, int i);

/// Gauge-conjugated e_i, entries prod_{j=k}^{k+i-1} r_j.
RationalMatrix exact_highest_weight_vector(int n, int i);

/// Local holomorphic differentials (q_2, ..., q_n) on the coordinate patch,
/// each a polynomial in z with ascending coefficients. An empty list is the
/// zero differential.
class DifferentialTuple {
public:
    DifferentialTuple() = default;
    /// polys[j-2] holds q_j; must have exactly n-1 entries.
    DifferentialTuple(int n, std::vector<std::vector<cd>> polys);

    /// All differentials zero.
    static DifferentialTuple zero(int n);

    int rank() const noexcept { return n_; }
    const std::vector<cd>& coefficients(int j) const;
    void set(int j, std::vector<cd> coeffs);
    cd eval(int j, cd z) const;
    /// Values (q_2(z), ..., q_n(z)).
    std::vector<cd> eval_all(cd z) const;
    bool is_zero(int j) const;
    const std::vector<std::vector<cd>>& polys() const noexcept { return polys_; }

private:
    int n_ = 0;
    std::vector<std::vector<cd>> polys_;
};

/// Gauged Hitchin-section Higgs matrix at values (q_2, ..., q_n): ones on the
/// subdiagonal and (prod_{i=k}^{k+j-2} r_i) q_j at (k, k+j-1).
Eigen::MatrixXcd higgs_matrix_from_values(int n, const std::vector<cd>& q_values);
Eigen::MatrixXcd higgs_matrix(const DifferentialTuple& q, cd z);

/// Coefficients c_0..c_n of det(lambda - A) = sum c_k lambda^{n-k}, c_0 = 1.
std::vector<cd> characteristic_coefficients(const Eigen::MatrixXcd& a);

/// Inverse of the Hitchin section on its image: recovers (q_2, ..., q_n) from
/// a section matrix.
std::vector<cd> hitchin_invariants(const Eigen::MatrixXcd& phi);

}  // namespace hitchin

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace hitchin {

using cd = std::complex<double>;

/// Largest rank the field solvers accept. Small per-node matrices live on the
/// stack with this bound.
inline constexpr int kMaxRank = 10;

using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRank, 1>;

}  // namespace hitchin

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>

namespace daekit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Tolerances {
    double rank_guard = 1e3;     // guard ratio for rank decisions
    double chain = 1e-8;         // chain and dual-chain relation residuals (relative)
    double biorth = 1e-8;
    double proj = 1e-8;
    double cond_cap = 1e10;      // largest accepted condition number for λ*A+B and Gram matrices
    double consistency = 1e-10;  // residual_L0 after consistent initialization
};

// Frobenius-relative distance between two matrices, floored at `scale`.
inline double rel_diff(const Mat& a, const Mat& b, double scale = 1.0) {
    double den = std::max({a.norm(), b.norm(), scale});
    return (a - b).norm() / den;
}

}  // namespace daekit

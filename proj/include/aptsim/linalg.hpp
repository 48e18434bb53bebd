#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace aptsim::linalg {

/// Largest condition number (1-norm estimate, after equilibration) accepted by the solvers.
inline constexpr double max_condition = 1e14;

struct DenseSolution {
    Eigen::VectorXcd x;
    double rcond = 0.0;
};

/// Solve a*x = b with row/column equilibration and partial-pivot LU.
///
/// Mechanical and electrical unknowns differ by many orders of magnitude, so the
/// condition estimate is taken on the equilibrated matrix. Throws Error when a row or
/// column is identically zero, the estimate exceeds max_condition or the result is
/// not finite.
template <class Error>
DenseSolution solve_dense(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, const std::string& what) {
    const Eigen::Index n = a.rows();
    if (n == 0 || a.cols() != n || b.size() != n) {
        throw Error(what + ": system is empty or not square");
    }

    Eigen::VectorXd row_scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = a.row(i).cwiseAbs().maxCoeff();
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw Error(what + ": row " + std::to_string(i) + " is zero or not finite");
        }
        row_scale(i) = 1.0 / m;
    }
    Eigen::MatrixXcd scaled = row_scale.asDiagonal() * a;

    Eigen::VectorXd col_scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double m = scaled.col(j).cwiseAbs().maxCoeff();
        if (!(m > 0.0)) {
            throw Error(what + ": unknown " + std::to_string(j) + " does not appear in any equation");
        }
        col_scale(j) = 1.0 / m;
    }
    scaled = scaled * col_scale.asDiagonal();

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(scaled);
    const double rcond = lu.rcond();
    if (!(rcond * max_condition >= 1.0)) {
        throw Error(what + ": matrix is singular or ill-conditioned (rcond " + std::to_string(rcond) + ")");
    }
    Eigen::VectorXcd y = lu.solve(row_scale.cast<std::complex<double>>().cwiseProduct(b));
    Eigen::VectorXcd x = col_scale.cast<std::complex<double>>().cwiseProduct(y);
    if (!x.allFinite()) {
        throw Error(what + ": solution is not finite");
    }
    return {std::move(x), rcond};
}

/// max_i |(a x - b)_i| / (sum_j |a_ij x_j| + |b_i|); 0 for rows that are identically zero.
inline double max_relative_residual(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& x, const Eigen::VectorXcd& b) {
    const Eigen::VectorXcd r = a * x - b;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double scale = std::abs(b(i));
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            scale += std::abs(a(i, j) * x(j));
        }
        if (scale > 0.0) {
            worst = std::max(worst, std::abs(r(i)) / scale);
        }
    }
    return worst;
}

}  // namespace aptsim::linalg

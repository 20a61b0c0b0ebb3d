#pragma once

#include <Eigen/Dense>

namespace rslq::matutil {

/// Scale-aware positive-definiteness threshold: a symmetric M counts as SPD
/// when eig_min(M) > spd_tolerance(M).
inline double spd_tolerance(const Eigen::MatrixXd& M) {
    return 1e-12 * (1.0 + std::abs(M.trace()));
}

bool is_symmetric(const Eigen::MatrixXd& M, double rel_tol = 1e-12);

/// Smallest eigenvalue of a symmetric matrix. Closed form for m <= 2,
/// iterative (tridiagonal QR) otherwise.
double eig_min(const Eigen::MatrixXd& M);

/// Solve M x = v for symmetric positive definite M (Cholesky).
/// Throws NotSpdError when eig_min(M) <= spd_tolerance(M).
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& v);

/// Relative residual of the bordered-determinant identity
///   (a - e'A^{-1}e) det(A) = a det(A - ee'/a),
/// i.e. |lhs - rhs| / max(1, |a det(A)|). Requires A SPD and a > 0; the
/// identity is exact, so the residual is numerically zero.
double schur_identity_residual(double a, const Eigen::VectorXd& e,
                               const Eigen::MatrixXd& A);

/// 1 - w F'(R + w F F')^{-1} F, which equals det(R)/det(R + w F F') by the
/// rank-one determinant identity; lies in [0, 1] whenever R >= 0 and w >= 0.
/// Requires R + w F F' positive definite.
double det_ratio_complement(const Eigen::MatrixXd& R, double w,
                            const Eigen::VectorXd& F);

}  // namespace rslq::matutil

#include "rslq/matutil.hpp"

#include <cmath>

#include "rslq/errors.hpp"

namespace rslq::matutil {

bool is_symmetric(const Eigen::MatrixXd& M, double rel_tol) {
    if (M.rows() != M.cols()) return false;
    double scale = 1.0 + M.cwiseAbs().maxCoeff();
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double eig_min(const Eigen::MatrixXd& M) {
    const auto m = M.rows();
    if (m == 1) return M(0, 0);
    if (m == 2) {
        // Closed form for the symmetric 2x2 spectrum.
        double a = M(0, 0), b = 0.5 * (M(0, 1) + M(1, 0)), c = M(1, 1);
        double mean = 0.5 * (a + c);
        double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
        return mean - rad;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& v) {
    if (eig_min(M) <= spd_tolerance(M))
        throw NotSpdError("solve_spd: matrix is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
        throw NotSpdError("solve_spd: Cholesky factorization failed");
    return llt.solve(v);
}

double schur_identity_residual(double a, const Eigen::VectorXd& e,
                               const Eigen::MatrixXd& A) {
    if (!(a > 0.0)) throw NotSpdError("schur_identity_residual: requires a > 0");
    if (eig_min(A) <= spd_tolerance(A))
        throw NotSpdError("schur_identity_residual: A is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    double quad = e.dot(llt.solve(e));
    double det_a = A.determinant();
    double lhs = (a - quad) * det_a;
    double rhs = a * (A - e * e.transpose() / a).determinant();
    return std::abs(lhs - rhs) / std::max(1.0, std::abs(a * det_a));
}

double det_ratio_complement(const Eigen::MatrixXd& R, double w,
                            const Eigen::VectorXd& F) {
    Eigen::MatrixXd total = R + w * F * F.transpose();
    if (eig_min(total) <= spd_tolerance(total))
        throw NotSpdError("det_ratio_complement: R + w F F' is singular");
    Eigen::LLT<Eigen::MatrixXd> llt(total);
    return 1.0 - w * F.dot(llt.solve(F));
}

}  // namespace rslq::matutil

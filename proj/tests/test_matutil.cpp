#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "rslq/errors.hpp"
#include "rslq/matutil.hpp"
#include "rslq/rng.hpp"

using namespace rslq;

TEST_CASE("eig_min closed forms") {
    CHECK(matutil::eig_min(Eigen::MatrixXd::Identity(1, 1)) == doctest::Approx(1.0));
    CHECK(matutil::eig_min(Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(1.0));
    Eigen::MatrixXd d(2, 2);
    d << 3.0, 0.0, 0.0, 0.5;
    CHECK(matutil::eig_min(d) == doctest::Approx(0.5));
    Eigen::MatrixXd s(2, 2);
    s << 2.0, 1.0, 1.0, 2.0;  // eigenvalues 1 and 3
    CHECK(matutil::eig_min(s) == doctest::Approx(1.0));
    Eigen::MatrixXd big = Eigen::MatrixXd::Identity(4, 4);
    big(2, 2) = 0.25;
    CHECK(matutil::eig_min(big) == doctest::Approx(0.25));
}

TEST_CASE("solve_spd basics and round trip") {
    Eigen::VectorXd v(3);
    v << 1.0, -2.0, 0.5;
    Eigen::MatrixXd M = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd x = matutil::solve_spd(M, v);
    CHECK((x - v / 2.0).cwiseAbs().maxCoeff() < 1e-14);

    PhiloxRng rng(11, 0);
    for (int trial = 0; trial < 200; ++trial) {
        int m = 1 + trial % 6;
        Eigen::MatrixXd G(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) G(a, b) = rng.normal();
        Eigen::MatrixXd A = G.transpose() * G + Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd rhs(m);
        for (int a = 0; a < m; ++a) rhs(a) = rng.normal();
        Eigen::VectorXd sol = matutil::solve_spd(A, rhs);
        double resid = (A * sol - rhs).norm() / std::max(1.0, rhs.norm());
        CHECK(resid < 1e-10);
    }

    Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(matutil::solve_spd(bad, Eigen::VectorXd::Zero(2)), NotSpdError);
}

TEST_CASE("bordered determinant identity: hand-computed instances") {
    // e = 0: both sides equal a det(A).
    CHECK(matutil::schur_identity_residual(1.0, Eigen::VectorXd::Zero(2),
                                           Eigen::MatrixXd::Identity(2, 2)) ==
          doctest::Approx(0.0).epsilon(1e-14));

    // a=2, e=(1,0)', A=I: lhs = (2-1)*1 = 1, rhs = 2*det(diag(1/2,1)) = 1.
    Eigen::VectorXd e(2);
    e << 1.0, 0.0;
    CHECK(matutil::schur_identity_residual(2.0, e, Eigen::MatrixXd::Identity(2, 2)) ==
          doctest::Approx(0.0).epsilon(1e-14));

    CHECK_THROWS_AS(
        matutil::schur_identity_residual(-1.0, e, Eigen::MatrixXd::Identity(2, 2)),
        NotSpdError);
}

TEST_CASE("bordered determinant identity: random SPD property suite") {
    PhiloxRng rng(42, 1);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        int m = 1 + trial % 5;
        Eigen::MatrixXd G(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) G(a, b) = rng.normal();
        Eigen::MatrixXd A = G.transpose() * G + Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd e(m);
        for (int a = 0; a < m; ++a) e(a) = rng.normal();
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        double a0 = e.dot(llt.solve(e)) + 0.1 + std::abs(rng.normal());
        worst = std::max(worst, matutil::schur_identity_residual(a0, e, A));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("det_ratio_complement values and range") {
    // w = 0 keeps the full ratio.
    CHECK(matutil::det_ratio_complement(Eigen::MatrixXd::Identity(3, 3), 0.0,
                                        Eigen::VectorXd::Ones(3)) ==
          doctest::Approx(1.0));

    // Degenerate R = 0 (scalar): det(0)/det(2) = 0.
    Eigen::MatrixXd zero1 = Eigen::MatrixXd::Zero(1, 1);
    Eigen::VectorXd f1 = Eigen::VectorXd::Ones(1);
    CHECK(matutil::det_ratio_complement(zero1, 2.0, f1) ==
          doctest::Approx(0.0).epsilon(1e-14));

    // Scalar 1 - 1/(1+1) = 1/2 = det(1)/det(2).
    CHECK(matutil::det_ratio_complement(Eigen::MatrixXd::Identity(1, 1), 1.0, f1) ==
          doctest::Approx(0.5));

    CHECK_THROWS_AS(matutil::det_ratio_complement(zero1, 0.0, f1), NotSpdError);

    // Equals det(R)/det(R + w F F') and stays in [0, 1] for PSD R.
    PhiloxRng rng(7, 2);
    int checked = 0;
    while (checked < 1000) {
        int m = 1 + checked % 4;
        Eigen::MatrixXd G(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) G(a, b) = rng.normal();
        Eigen::MatrixXd R = G.transpose() * G;
        Eigen::VectorXd F(m);
        for (int a = 0; a < m; ++a) F(a) = rng.normal();
        double w = std::abs(rng.normal());
        Eigen::MatrixXd total = R + w * F * F.transpose();
        if (matutil::eig_min(total) <= matutil::spd_tolerance(total)) continue;
        double v = matutil::det_ratio_complement(R, w, F);
        double direct = R.determinant() / total.determinant();
        CHECK(v == doctest::Approx(direct).epsilon(1e-8));
        CHECK(v >= -1e-10);
        CHECK(v <= 1.0 + 1e-10);
        ++checked;
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rslq/matutil.hpp"
#include "rslq/riccati.hpp"

using namespace rslq;

namespace {

Eigen::VectorXd v1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

Eigen::MatrixXd m1(double x) {
    Eigen::MatrixXd m(1, 1);
    m << x;
    return m;
}

// Pure linear single-regime model: dynamics decouple, P = G e^{2A(T-t)}.
RegimeModel linear_model(double A, double G, int n_steps) {
    ConstantRegimeSpec r;
    r.A = A;
    r.G_b = G;
    r.G_a = 1.0;
    r.R = m1(1.0);
    return make_constant_model(TimeGrid(1.0, n_steps), MarkovGenerator::single(), 1, 1,
                               {r}, 1.0, 1);
}

// Mean-variance style model: B = mu, D = sigma, R = Q = 0, G = 1.
RegimeModel mv_model(double mu, double sigma, int n_steps) {
    ConstantRegimeSpec r;
    r.B = v1(mu);
    r.D = m1(sigma);
    r.G_b = 1.0;
    r.G_a = 1.0;
    return make_constant_model(TimeGrid(1.0, n_steps), MarkovGenerator::single(), 1, 1,
                               {r}, 1.0, 1);
}

RegimeModel jumpy_model(int n_steps) {
    ConstantRegimeSpec r1;
    r1.A = 0.05;
    r1.B = v1(0.3);
    r1.C = v1(0.2);
    r1.D = m1(0.25);
    r1.E = -0.2;
    r1.F = v1(0.4);
    r1.Q = 0.1;
    r1.R = m1(1.0);
    r1.G_b = 1.0;
    r1.G_a = 0.8;
    r1.lambda = 0.3;
    ConstantRegimeSpec r2 = r1;
    r2.A = -0.02;
    r2.B = v1(0.2);
    r2.D = m1(0.3);
    r2.E = -0.1;
    r2.G_b = 1.2;
    r2.G_a = 0.9;
    r2.lambda = 0.5;
    MarkovGenerator gen = MarkovGenerator::from_rows(2, {-1.0, 1.0, 0.8, -0.8});
    return make_constant_model(TimeGrid(1.0, n_steps), gen, 1, 1, {r1, r2}, 1.2, 1);
}

// Small dense matrix exponential via scaling-and-squaring Taylor; test oracle
// independent of the RK4 path.
Eigen::MatrixXd expm(Eigen::MatrixXd M) {
    int squarings = 0;
    while (M.cwiseAbs().rowwise().sum().maxCoeff() > 0.25) {
        M *= 0.5;
        ++squarings;
    }
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(M.rows(), M.cols());
    Eigen::MatrixXd term = X;
    for (int k = 1; k <= 40; ++k) {
        term = (term * M) / static_cast<double>(k);
        X += term;
        if (term.cwiseAbs().maxCoeff() < 1e-20) break;
    }
    for (int s = 0; s < squarings; ++s) X = X * X;
    return X;
}

}  // namespace

TEST_CASE("tilde coefficients follow the reduction") {
    RegimeModel model = jumpy_model(4);
    CoefficientSlice s = model.eval(0.5, 1);
    TildeCoefficients tc = make_tilde(s);
    CHECK(tc.A_t == doctest::Approx(0.05 - 0.3 * (-0.2) - 0.15));
    CHECK(tc.B_t(0) == doctest::Approx(0.3 - 0.3 * 0.4));
    CHECK(tc.Q_t == doctest::Approx(0.1 + 0.3 * 0.8 * 0.64));
    CHECK(tc.R_t(0, 0) == doctest::Approx(1.0 + 0.3 * 0.8 * 0.16));
    CHECK(tc.S(0) == doctest::Approx(0.3 * 0.8 * 0.8 * 0.4));
}

TEST_CASE("nhat: affine intercept and degenerate loadings") {
    // P = 0 leaves only S = lambda G_a (E+1) F.
    RegimeModel model = jumpy_model(4);
    Eigen::VectorXd n0 = nhat(model, 0.5, 0.0, 1);
    CHECK(n0(0) == doctest::Approx(0.3 * 0.8 * 0.8 * 0.4));

    // B = C = F = 0 kills every term for any P.
    ConstantRegimeSpec r;
    r.R = m1(1.0);
    r.D = m1(0.5);
    RegimeModel flat = make_constant_model(TimeGrid(1.0, 4), MarkovGenerator::single(),
                                           1, 1, {r}, 1.0, 1);
    CHECK(nhat(flat, 0.3, 2.7, 1)(0) == doctest::Approx(0.0));

    // Mean-variance map with lambda = 0: nhat = P mu.
    RegimeModel mv = mv_model(0.07, 0.2, 4);
    CHECK(nhat(mv, 0.5, 1.0, 1)(0) == doctest::Approx(0.07));
}

TEST_CASE("rhat: base value and loadings") {
    RegimeModel mv = mv_model(0.05, 0.2, 4);
    // P = 0 -> R~ (here zero); P = 3, D'D = sigma^2.
    CHECK(rhat(mv, 0.5, 0.0, 1)(0, 0) == doctest::Approx(0.0));
    CHECK(rhat(mv, 0.5, 3.0, 1)(0, 0) == doctest::Approx(3.0 * 0.04));

    // m=1, R=0, lambda=2, G_a=1, F=1, D=0: rhat = 2 for any P.
    ConstantRegimeSpec r;
    r.lambda = 2.0;
    r.F = v1(1.0);
    RegimeModel jump = make_constant_model(TimeGrid(1.0, 4), MarkovGenerator::single(),
                                           1, 1, {r}, 1.0, 1);
    CHECK(rhat(jump, 0.2, 0.7, 1)(0, 0) == doctest::Approx(2.0));
    CHECK(rhat(jump, 0.2, 5.0, 1)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("pbm_rhs: degenerate and coupled linear forms") {
    RegimeModel lin = linear_model(0.4, 2.0, 4);
    Eigen::VectorXd P(1);
    P << 3.0;
    CHECK(pbm_rhs(lin, 0.5, P)(0) == doctest::Approx(-2.0 * 0.4 * 3.0));

    ConstantRegimeSpec r1, r2;
    r1.A = 0.25;
    r1.R = m1(1.0);
    r1.G_a = 1.0;
    r2.A = -0.15;
    r2.R = m1(1.0);
    r2.G_a = 1.0;
    MarkovGenerator gen = MarkovGenerator::from_rows(2, {-1.0, 1.0, 1.0, -1.0});
    RegimeModel two = make_constant_model(TimeGrid(1.0, 4), gen, 1, 1, {r1, r2}, 1.0, 1);
    Eigen::VectorXd P2(2);
    P2 << 2.0, 0.5;
    Eigen::VectorXd rhs = pbm_rhs(two, 0.5, P2);
    // rhs^1 = -2 A1 P1 + (P1 - P2) q12
    CHECK(rhs(0) == doctest::Approx(-2.0 * 0.25 * 2.0 + (2.0 - 0.5)));
    CHECK(rhs(1) == doctest::Approx(-2.0 * (-0.15) * 0.5 + (0.5 - 2.0)));

    // Mean-variance: rhs = theta^2 P with theta^2 = mu^2 / sigma^2.
    RegimeModel mv = mv_model(0.05, 0.2, 4);
    Eigen::VectorXd Pm(1);
    Pm << 0.8;
    double theta2 = 0.05 * 0.05 / 0.04;
    CHECK(pbm_rhs(mv, 0.5, Pm)(0) == doctest::Approx(theta2 * 0.8));
}

TEST_CASE("pbm_rhs enforces the positivity constraint") {
    ConstantRegimeSpec r;  // R-hat identically zero: outside every case
    RegimeModel model = make_constant_model(TimeGrid(1.0, 4), MarkovGenerator::single(),
                                            1, 1, {r}, 1.0, 1);
    Eigen::VectorXd P(1);
    P << 1.0;
    CHECK_THROWS_AS(pbm_rhs(model, 0.5, P), RhatNotPositiveError);
}

TEST_CASE("solve_pbm: closed-form linear oracle") {
    RegimeModel model = linear_model(0.3, 2.0, 2000);
    RiccatiSolution sol = solve_pbm(model);
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        double t = model.grid.node(k);
        double exact = 2.0 * std::exp(0.6 * (1.0 - t));
        worst = std::max(worst, std::abs(sol.pb_node(1, k) - exact) / exact);
    }
    CHECK(worst <= 1e-8);
    CHECK(sol.lambda_b.size() == 1);
    CHECK(sol.lambda_b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_pbm: mean-variance closed form") {
    RegimeModel model = mv_model(0.05, 0.2, 500);
    RiccatiSolution sol = solve_pbm(model);
    double theta2 = 0.0625;
    double worst = 0.0;
    for (int k = 0; k <= 500; ++k) {
        double t = model.grid.node(k);
        double exact = std::exp(-theta2 * (1.0 - t));
        worst = std::max(worst, std::abs(sol.pb_node(1, k) - exact) / exact);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("solve_pbm: two-regime matrix exponential oracle") {
    ConstantRegimeSpec r1, r2;
    r1.A = 0.25;
    r1.G_b = 1.5;
    r1.G_a = 1.0;
    r1.R = m1(1.0);
    r2.A = -0.15;
    r2.G_b = 0.7;
    r2.G_a = 1.0;
    r2.R = m1(1.0);
    MarkovGenerator gen = MarkovGenerator::from_rows(2, {-1.0, 1.0, 0.8, -0.8});
    RegimeModel model = make_constant_model(TimeGrid(1.0, 400), gen, 1, 1, {r1, r2},
                                            1.0, 1);
    RiccatiSolution sol = solve_pbm(model);

    Eigen::MatrixXd M(2, 2);
    M << 0.5 - 1.0, 1.0, 0.8, -0.3 - 0.8;
    Eigen::VectorXd g(2);
    g << 1.5, 0.7;
    double worst = 0.0;
    for (int k = 0; k <= 400; ++k) {
        double t = model.grid.node(k);
        Eigen::VectorXd exact = expm(M * (1.0 - t)) * g;
        for (int i = 1; i <= 2; ++i)
            worst = std::max(worst, std::abs(sol.pb_node(i, k) - exact(i - 1)) /
                                        std::abs(exact(i - 1)));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("solve_pbm refuses uncertified models") {
    ConstantRegimeSpec r;  // no positive certificate anywhere
    RegimeModel model = make_constant_model(TimeGrid(1.0, 4), MarkovGenerator::single(),
                                            1, 1, {r}, 1.0, 1);
    CHECK_THROWS_AS(solve_pbm(model), CaseNoneError);
}

TEST_CASE("comparison envelope: coincides with the solution in the linear case") {
    RegimeModel model = linear_model(0.3, 2.0, 100);
    RiccatiSolution sol = solve_pbm(model);
    for (int k = 0; k <= 100; ++k)
        CHECK(sol.upper[0][static_cast<size_t>(k)] ==
              doctest::Approx(sol.pb[0][static_cast<size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("comparison envelope dominates and stays nonnegative") {
    RegimeModel model = jumpy_model(200);
    RiccatiSolution sol = solve_pbm(model);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k <= 200; ++k) {
            double p = sol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)];
            double up = sol.upper[static_cast<size_t>(i)][static_cast<size_t>(k)];
            CHECK(p <= up + 1e-8);
            CHECK(p >= -1e-8);
            CHECK(up >= -1e-8);
        }
}

TEST_CASE("singular I lower bound: trivial and generic") {
    // All drift-like terms zero, single regime: c2 = 0 and the bound is delta.
    ConstantRegimeSpec r;
    r.D = m1(1.0);   // D'D = 1
    r.G_b = 1.0;
    r.G_a = 1.0;
    RegimeModel triv = make_constant_model(TimeGrid(1.0, 10), MarkovGenerator::single(),
                                           1, 1, {r}, 1.0, 1);
    AssumptionCase cs = classify_case(triv);
    REQUIRE(cs.holds(CaseKind::SingularI));
    CHECK(lower_bound_singular1(triv) == doctest::Approx(cs.delta_for(CaseKind::SingularI)));

    // Generic singular-I model: the solved grid respects the bound.
    ConstantRegimeSpec g1, g2;
    g1.B = v1(0.06);
    g1.D = m1(0.2);
    g1.G_b = 1.0;
    g1.G_a = 1.0;
    g1.lambda = 0.2;
    g1.F = v1(0.1);
    g2.B = v1(0.03);
    g2.D = m1(0.3);
    g2.G_b = 1.0;
    g2.G_a = 1.0;
    g2.lambda = 0.4;
    g2.F = v1(0.15);
    MarkovGenerator gen = MarkovGenerator::from_rows(2, {-0.5, 0.5, 0.7, -0.7});
    RegimeModel model = make_constant_model(TimeGrid(1.0, 200), gen, 1, 1, {g1, g2},
                                            1.0, 1);
    double lb = lower_bound_singular1(model);
    CHECK(lb > 0.0);
    RiccatiSolution sol = solve_pbm(model);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k <= 200; ++k)
            CHECK(sol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)] >= lb - 1e-8);
}

TEST_CASE("singular II' lower bound on a pure-jump model") {
    ConstantRegimeSpec r;
    r.B = v1(0.05);
    r.F = v1(0.5);
    r.lambda = 0.3;
    r.G_b = 1.0;
    r.G_a = 1.0;
    RegimeModel model = make_constant_model(TimeGrid(1.0, 200),
                                            MarkovGenerator::single(), 1, 1, {r}, 1.0, 1);
    AssumptionCase cs = classify_case(model);
    REQUIRE(cs.holds(CaseKind::SingularIIPrime));
    double lb = lower_bound_singular2(model);
    CHECK(lb > 0.0);
    RiccatiSolution sol = solve_pbm(model);
    for (int k = 0; k <= 200; ++k)
        CHECK(sol.pb[0][static_cast<size_t>(k)] >= lb - 1e-8);

    // The bound op refuses models without the certificate.
    RegimeModel lin = linear_model(0.1, 1.0, 4);
    CHECK_THROWS_AS(lower_bound_singular2(lin), CaseNoneError);
    CHECK_THROWS_AS(lower_bound_singular1(lin), CaseNoneError);
}

TEST_CASE("sub-step refinement converges at high order") {
    RegimeModel model = jumpy_model(25);
    RiccatiSolution ref = solve_pbm(model, 64);
    double err[2];
    int subs[2] = {1, 2};
    for (int lvl = 0; lvl < 2; ++lvl) {
        RiccatiSolution sol = solve_pbm(model, subs[lvl]);
        double worst = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k <= 25; ++k)
                worst = std::max(worst,
                                 std::abs(sol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)] -
                                          ref.pb[static_cast<size_t>(i)][static_cast<size_t>(k)]));
        err[lvl] = worst;
    }
    CHECK(err[0] / err[1] >= 8.0);  // order >= 3 observed; 4 expected on smooth data
}

TEST_CASE("decompose: terminal consistency and the pre-jump identity") {
    RegimeModel model = jumpy_model(100);
    RiccatiSolution sol = solve_pbm(model);
    JumpSolution js = decompose(sol, model);

    // G_a == G_b constant and P(T) = G_b force U(T) = 0.
    ConstantRegimeSpec r;
    r.R = m1(1.0);
    r.G_b = 0.8;
    r.G_a = 0.8;
    RegimeModel flat = make_constant_model(TimeGrid(1.0, 10), MarkovGenerator::single(),
                                           1, 1, {r}, 1.0, 1);
    JumpSolution fjs = decompose(solve_pbm(flat), flat);
    CHECK(fjs.U(1, 1.0, 2.0) == doctest::Approx(0.0).epsilon(1e-12));

    // P_{t-} + U_t = G_a(t) for t <= tau, exactly.
    for (int k = 0; k <= 100; ++k) {
        double t = model.grid.node(k);
        for (int i = 1; i <= 2; ++i) {
            double lhs = js.P_pre(i, t, 10.0) + js.U(i, t, 10.0);
            CHECK(std::abs(lhs - js.ga_at(i, t)) <= 1e-15 * (1.0 + std::abs(lhs)));
        }
    }

    // Jump of size U at tau; P freezes at G_a(tau) afterwards.
    double tau = 0.437;
    for (int i = 1; i <= 2; ++i) {
        double before = js.P_pre(i, tau, tau);
        double after = js.P(i, tau, tau);
        CHECK(after - before == doctest::Approx(js.U(i, tau, tau)).epsilon(1e-12));
        CHECK(js.P(i, 0.9, tau) == doctest::Approx(js.ga_at(i, tau)));
        CHECK(js.U(i, 0.9, tau) == 0.0);
    }

    // Mean-variance map: P + U = 1 before the jump.
    RegimeModel mv = mv_model(0.05, 0.2, 50);
    JumpSolution mvjs = decompose(solve_pbm(mv), mv);
    for (int k = 0; k <= 50; ++k) {
        double t = mv.grid.node(k);
        CHECK(mvjs.P_pre(1, t, 2.0) + mvjs.U(1, t, 2.0) == doctest::Approx(1.0));
    }
}

TEST_CASE("jump system residual: no-jump path reduces to the ODE residual") {
    RegimeModel model = mv_model(0.05, 0.2, 2000);
    JumpSolution js = decompose(solve_pbm(model), model);
    RegimePath path;
    path.T = 1.0;
    path.epochs = {0.0};
    path.states = {1};
    double res = jump_bsde_residual(js, model, path, kNoJump);
    CHECK(res <= 1e-6);
}

TEST_CASE("multidimensional controls: solve, bounds and gain denominator") {
    // m = n = 2, two regimes, jumps; Standard case.
    ConstantRegimeSpec r1;
    r1.A = 0.05;
    r1.B = (Eigen::VectorXd(2) << 0.3, -0.1).finished();
    r1.C = (Eigen::VectorXd(2) << 0.2, 0.1).finished();
    r1.D = (Eigen::MatrixXd(2, 2) << 0.25, 0.05, -0.1, 0.3).finished();
    r1.E = -0.2;
    r1.F = (Eigen::VectorXd(2) << 0.4, 0.2).finished();
    r1.Q = 0.1;
    r1.R = (Eigen::MatrixXd(2, 2) << 1.0, 0.2, 0.2, 0.8).finished();
    r1.G_b = 1.0;
    r1.G_a = 0.8;
    r1.lambda = 0.3;
    ConstantRegimeSpec r2 = r1;
    r2.A = -0.02;
    r2.B = (Eigen::VectorXd(2) << 0.1, 0.2).finished();
    r2.G_b = 1.2;
    r2.G_a = 0.9;
    r2.lambda = 0.5;
    MarkovGenerator gen = MarkovGenerator::from_rows(2, {-1.0, 1.0, 0.8, -0.8});
    RegimeModel model = make_constant_model(TimeGrid(1.0, 100), gen, 2, 2, {r1, r2},
                                            1.1, 1);
    // Elliptic R and elliptic D'D with positive G: both certificates hold,
    // and the uniformly positive one is designated.
    AssumptionCase cs = classify_case(model);
    REQUIRE(cs.holds(CaseKind::Standard));
    REQUIRE(cs.holds(CaseKind::SingularI));
    CHECK(cs.kind == CaseKind::SingularI);

    RiccatiSolution sol = solve_pbm(model);
    CHECK(sol.lower_bound > 0.0);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k <= 100; ++k) {
            double p = sol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)];
            CHECK(p >= -1e-8);
            CHECK(p <= sol.upper[static_cast<size_t>(i)][static_cast<size_t>(k)] + 1e-8);
            CHECK(matutil::eig_min(rhat(model, model.grid.node(k), p, i + 1)) > 0.0);
        }
}

TEST_CASE("jump system residual halves (or better) under grid refinement") {
    RegimePath path;
    path.T = 1.0;
    path.epochs = {0.0, 0.41};
    path.states = {1, 2};
    const double tau = 0.63;
    double res[3];
    int steps[3] = {100, 200, 400};
    for (int lvl = 0; lvl < 3; ++lvl) {
        RegimeModel m = jumpy_model(steps[lvl]);
        JumpSolution js = decompose(solve_pbm(m), m);
        res[lvl] = jump_bsde_residual(js, m, path, tau);
    }
    CHECK(res[0] / res[1] >= 1.8);
    CHECK(res[1] / res[2] >= 1.8);
}

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rslq/control.hpp"
#include "rslq/model.hpp"
#include "rslq/riccati.hpp"
#include "rslq/simulate.hpp"

namespace rslq {

/// Defaultable market with regime switching: m risky assets, n-dimensional
/// Brownian driver, price jump loadings F (componentwise >= -1), default
/// intensity lambda, and a payoff paid at T (H_b) or at the default time
/// (H_a). Requires sigma sigma' uniformly elliptic, or m = 1 with
/// lambda F^2 uniformly positive.
struct MarketRegime {
    std::vector<Eigen::VectorXd> mu;     // m, appreciation
    std::vector<Eigen::MatrixXd> sigma;  // m x n, volatility
    std::vector<Eigen::VectorXd> F;      // m, jump loadings
    std::vector<double> lambda;
    std::vector<double> H_a;             // payoff if default at t
    double H_b = 0.0;                    // payoff if no default before T
};

struct MarketModel {
    int m = 1;
    int n = 1;
    int ell = 1;
    TimeGrid grid;
    MarkovGenerator generator;
    std::vector<MarketRegime> regimes;
    double x0 = 0.0;
    int i0 = 1;
};

struct ConstantMarketSpec {
    Eigen::VectorXd mu;     // sized on build if empty
    Eigen::MatrixXd sigma;
    Eigen::VectorXd F;
    double lambda = 0.0;
    double H_a = 0.0;
    double H_b = 0.0;
};

MarketModel make_constant_market(const TimeGrid& grid, const MarkovGenerator& gen,
                                 int m, int n,
                                 const std::vector<ConstantMarketSpec>& specs,
                                 double x0, int i0);

/// Map the market into the generic problem data: A = 0, B = mu, C = 0,
/// D = sigma', E = 0, Q = 0, R = 0, G = 1. Throws CaseNoneError when neither
/// nondegeneracy condition holds, InvalidModelError on structural defects.
RegimeModel to_lq(const MarketModel& market);

/// Solved hedging data: P from the quadratic system, K from the linear
/// payoff system, the transform h = K/P, and gamma = H_a - h. The Brownian
/// loadings eta and L are identically zero here; zeta = H_a - K.
struct HedgeSolution {
    MarketModel market;
    RegimeModel lq;          // mapped model
    RiccatiSolution psol;
    JumpSolution jump;
    std::vector<std::vector<double>> K;  // [regime-1][node]
    std::vector<std::vector<double>> h;  // K / P
    FeedbackPolicy policy;   // affine portfolio feedback (gain and offset)

    double p_at(int i, double t) const { return psol.pb_at(i, t); }
    /// Brownian loading of the payoff equation; identically zero here.
    double eta() const { return 0.0; }
    double k_at(int i, double t) const;
    double h_at(int i, double t) const;
    /// H_a evaluated with the coefficient convention (left-continuous).
    double ha_at(int i, double t) const;
    /// gamma(t, i) = H_a(t, i) - h(t, i).
    double gamma_at(int i, double t) const;
    /// zeta(t, i) = H_a(t, i) - K(t, i).
    double zeta_at(int i, double t) const { return ha_at(i, t) - k_at(i, t); }
};

/// Solve the quadratic system for the mapped market; asserts the uniformly
/// positive certificate.
RiccatiSolution solve_pmv(const MarketModel& market, int sub_steps = 10);

/// Backward solve of the linear payoff system (terminal H_b), integrated
/// jointly with P so no interpolation of P enters the stages.
std::vector<std::vector<double>> solve_k_system(const MarketModel& market,
                                                const RiccatiSolution& psol,
                                                int sub_steps = 10);

/// h = K/P and gamma = H_a - h on the node grids.
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
h_transform(const std::vector<std::vector<double>>& K, const RiccatiSolution& psol,
            const MarketModel& market);

/// Full pipeline: map, solve P and K, transform.
HedgeSolution solve_hedge(const MarketModel& market, int sub_steps = 10);

/// Optimal portfolio at (t, X, i) before the default:
/// -(P sigma sigma' + lambda F F')^{-1} [(P mu + lambda F (1-P))(X - h) - lambda gamma F].
Eigen::VectorXd optimal_portfolio(double t, double X, int i, const HedgeSolution& sol);

/// The hedging policy in affine feedback form (gain and offset node grids).
FeedbackPolicy hedge_policy(const HedgeSolution& sol);

/// Residual integrand of the value decomposition; nonnegative up to roundoff:
/// gamma^2 lambda (1 - lambda F'(P sigma sigma' + lambda F F')^{-1} F).
double o_term(double t, int i, const HedgeSolution& sol);

struct HedgeValue {
    double v0 = 0.0;            // P_0 (x - h_0)^2, exact
    double v_mismatch = 0.0;    // cross-regime payoff mismatch term
    double v_mismatch_se = 0.0;
    double v_o = 0.0;           // unhedgeable-noise term
    double v_o_se = 0.0;
    std::uint64_t n_chains = 0;
    double total() const { return v0 + v_mismatch + v_o; }
    double total_se() const;
};

/// Three-term optimal value. The two expectations run over regime chains
/// only, weighting by the exact conditional survival probability instead of
/// sampling the default time.
HedgeValue hedge_value(const HedgeSolution& sol, double x, int i0,
                       std::uint64_t n_chains, std::uint64_t seed);

/// Direct Monte Carlo of E (X_{T^tau} - H)^2 under the optimal portfolio.
CostEstimate hedging_error_simulation(const HedgeSolution& sol,
                                      std::uint64_t n_paths, int dt_div,
                                      std::uint64_t seed, int n_threads = 0);

/// Diagnostic: max nodewise residual of the discrete payoff-ratio equation
/// (the transform is exact; the residual is first order in the grid step).
double h_system_residual(const HedgeSolution& sol);

}  // namespace rslq

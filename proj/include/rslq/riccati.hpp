#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rslq/model.hpp"
#include "rslq/path.hpp"

namespace rslq {

/// Coefficients of the jump-free backward system after absorbing the
/// at-jump terminal weight into the running data.
struct TildeCoefficients {
    double A_t = 0.0;          // A - lambda E - lambda/2
    Eigen::VectorXd B_t;       // B - lambda F
    double Q_t = 0.0;          // Q + lambda G_a (E+1)^2
    Eigen::MatrixXd R_t;       // R + lambda G_a F F'
    Eigen::VectorXd S;         // lambda G_a (E+1) F
};

TildeCoefficients make_tilde(const CoefficientSlice& s);

/// Grids of the pre-jump backward solution P^b per regime, with the
/// comparison upper envelope and the certified lower bound.
struct RiccatiSolution {
    TimeGrid grid;
    int ell = 1;
    int n = 1;
    std::vector<std::vector<double>> pb;     // [regime-1][node], node 0 is t=0
    std::vector<std::vector<double>> upper;  // comparison bound, same layout
    Eigen::VectorXd lambda_b;    // Brownian martingale loading; identically zero
    double lower_bound = 0.0;    // analytic lower bound; 0 in the nonnegative cases
    AssumptionCase case_info;

    double pb_node(int i, int k) const {
        return pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
    }
    /// Linear interpolation between nodes (P^b is continuous in t).
    double pb_at(int i, double t) const;
};

/// The random-horizon solution assembled from the pre-jump grids: before the
/// jump P follows P^b, at/after the jump it freezes at G^a(tau); U is the
/// jump size G^a(t) - P^b(t) while the clock is alive, 0 afterwards.
struct JumpSolution {
    TimeGrid grid;
    int ell = 1;
    std::vector<std::vector<double>> pb;        // node grids, as in RiccatiSolution
    std::vector<std::vector<double>> ga_slice;  // [regime-1][slice], copied from model
    double lower_bound = 0.0;
    AssumptionCase case_info;

    double ga_at(int i, double t) const;  // left-continuous piecewise constant
    double pb_at(int i, double t) const;

    /// P_t along a path with jump time tau (kNoJump if none).
    double P(int i, double t, double tau) const {
        return (t < tau) ? pb_at(i, t) : ga_at(i, tau);
    }
    /// Left limit P_{t-}: the jump to G^a(tau) has not been applied yet at t = tau.
    double P_pre(int i, double t, double tau) const {
        return (t <= tau) ? pb_at(i, t) : ga_at(i, tau);
    }
    double U(int i, double t, double tau) const {
        return (t <= tau) ? ga_at(i, t) - pb_at(i, t) : 0.0;
    }
    double Lambda() const { return 0.0; }
};

/// N-hat of the jump-free system at (t, i) with martingale loading zero:
/// P (D'C + B~) + S.
Eigen::VectorXd nhat(const RegimeModel& model, double t, double P, int i);

/// R-hat of the jump-free system: R~ + P D'D.
Eigen::MatrixXd rhat(const RegimeModel& model, double t, double P, int i);

/// dP/dt of the coupled backward system at time t (the negated generator:
/// integrating forward in reversed time from G^b reproduces P^b).
/// Throws RhatNotPositiveError when R-hat loses definiteness at (t, i).
Eigen::VectorXd pbm_rhs(const RegimeModel& model, double t, const Eigen::VectorXd& P);

/// Comparison envelope: the same linear backward system without the
/// quadratic term, integrated from the same terminal data.
std::vector<std::vector<double>> comparison_upper_bound(const RegimeModel& model,
                                                        int sub_steps = 10);

/// delta e^{-c2 T} with c2 the certified drift bound of the Singular I case.
double lower_bound_singular1(const RegimeModel& model);
/// 1 / ((1 + 1/delta) e^{c4 T} - 1) of the Singular II' case.
double lower_bound_singular2(const RegimeModel& model);

/// Backward RK4 solve of the jump-free system on the model grid with
/// `sub_steps` integrator steps per grid interval. Checks R-hat positivity
/// at every stage and the case-appropriate a-priori bounds on the result.
RiccatiSolution solve_pbm(const RegimeModel& model, int sub_steps = 10);

/// Assemble the random-horizon solution from the pre-jump grids.
JumpSolution decompose(const RiccatiSolution& sol, const RegimeModel& model);

/// Max nodewise residual of the discrete integral form of the jump system
/// along a realized path: between-jump drift plus compensator, and the jump
/// of size U at tau. First-order in the grid spacing.
double jump_bsde_residual(const JumpSolution& jump_sol, const RegimeModel& model,
                          const RegimePath& path, double tau);

}  // namespace rslq

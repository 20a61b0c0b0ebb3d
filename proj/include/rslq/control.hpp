#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rslq/model.hpp"
#include "rslq/riccati.hpp"

namespace rslq {

/// N of the jump system at (t, i) with jump clock alive (lambda^G = lambda):
/// P (D'C + B) + D'Lambda + lambda E F (P + U) + lambda F U.
Eigen::VectorXd ncal(const RegimeModel& model, double t, double P,
                     const Eigen::VectorXd& Lambda, double U, int i);

/// R of the jump system: R + P D'D + lambda (P + U) F F'.
Eigen::MatrixXd rcal(const RegimeModel& model, double t, double P, double U, int i);

/// Affine feedback u(t, X, i) = -K(t, i) X + c(t, i), stored at the grid
/// nodes and looked up piecewise-constantly with the model's left-continuous
/// convention. The linear policies of the LQ problem have c = 0; the offset
/// carries the hedging policies. After the jump the horizon has ended, so the
/// post-jump gain is stored as zero.
struct FeedbackPolicy {
    TimeGrid grid;
    int ell = 1;
    int m = 1;
    // [regime-1][node]: gain at node t_k; the value on (t_k, t_{k+1}] is the
    // node-(k+1) entry.
    std::vector<std::vector<Eigen::VectorXd>> gain;
    std::vector<std::vector<Eigen::VectorXd>> offset;

    static FeedbackPolicy zero(const TimeGrid& grid, int ell, int m);

    bool is_linear() const;  // every offset zero

    /// Node accessors (k in 0..n_steps).
    const Eigen::VectorXd& gain_node(int i, int k) const {
        return gain[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
    }
    const Eigen::VectorXd& offset_node(int i, int k) const {
        return offset[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
    }

    /// Left-continuous lookup: t in (t_k, t_{k+1}] -> node k+1; t = 0 -> node 0.
    int node_index(double t) const;

    /// Control for state X at (t, i); zero once the jump has occurred.
    Eigen::VectorXd u(double t, double X, int i, bool jumped = false) const;
};

/// Optimal feedback gains K = rcal^{-1} ncal on the grid.
/// Throws RhatNotPositiveError if the gain denominator loses definiteness.
FeedbackPolicy build_policy(const JumpSolution& jump_sol, const RegimeModel& model);

/// Optimal cost P^b(0, i0) x^2.
double optimal_value(const JumpSolution& jump_sol, double x, int i0);

}  // namespace rslq

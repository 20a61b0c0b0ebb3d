#include "rslq/control.hpp"

#include <cmath>
#include <sstream>

#include "rslq/matutil.hpp"

namespace rslq {

Eigen::VectorXd ncal(const RegimeModel& model, double t, double P,
                     const Eigen::VectorXd& Lambda, double U, int i) {
    CoefficientSlice s = model.eval(t, i);
    return P * (s.D.transpose() * s.C + s.B) + s.D.transpose() * Lambda +
           s.lambda * s.E * (P + U) * s.F + s.lambda * U * s.F;
}

Eigen::MatrixXd rcal(const RegimeModel& model, double t, double P, double U, int i) {
    CoefficientSlice s = model.eval(t, i);
    return s.R + P * s.D.transpose() * s.D +
           s.lambda * (P + U) * s.F * s.F.transpose();
}

FeedbackPolicy FeedbackPolicy::zero(const TimeGrid& grid, int ell, int m) {
    FeedbackPolicy p;
    p.grid = grid;
    p.ell = ell;
    p.m = m;
    auto zrow = std::vector<Eigen::VectorXd>(static_cast<size_t>(grid.n_nodes()),
                                             Eigen::VectorXd::Zero(m));
    p.gain.assign(static_cast<size_t>(ell), zrow);
    p.offset.assign(static_cast<size_t>(ell), zrow);
    return p;
}

bool FeedbackPolicy::is_linear() const {
    for (const auto& row : offset)
        for (const auto& c : row)
            if (c.cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

int FeedbackPolicy::node_index(double t) const {
    if (t <= 0.0) return 0;
    double pos = t / grid.dt();
    int k = static_cast<int>(std::ceil(pos - 1e-9));
    if (k < 0) k = 0;
    if (k > grid.n_steps) k = grid.n_steps;
    return k;
}

Eigen::VectorXd FeedbackPolicy::u(double t, double X, int i, bool jumped) const {
    if (jumped) return Eigen::VectorXd::Zero(m);
    int k = node_index(t);
    return -gain_node(i, k) * X + offset_node(i, k);
}

FeedbackPolicy build_policy(const JumpSolution& jump_sol, const RegimeModel& model) {
    FeedbackPolicy p = FeedbackPolicy::zero(model.grid, model.ell, model.m);
    for (int i = 1; i <= model.ell; ++i) {
        for (int k = 0; k <= model.grid.n_steps; ++k) {
            double t = model.grid.node(k);
            double P = jump_sol.pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double U = model.eval(t, i).G_a - P;
            Eigen::MatrixXd rc = rcal(model, t, P, U, i);
            if (matutil::eig_min(rc) <= matutil::spd_tolerance(rc)) {
                std::ostringstream os;
                os << "gain denominator not positive definite at t=" << t
                   << ", regime " << i;
                throw RhatNotPositiveError(t, i, os.str());
            }
            Eigen::VectorXd nc =
                ncal(model, t, P, Eigen::VectorXd::Zero(model.n), U, i);
            p.gain[static_cast<size_t>(i) - 1][static_cast<size_t>(k)] =
                matutil::solve_spd(rc, nc);
        }
    }
    return p;
}

double optimal_value(const JumpSolution& jump_sol, double x, int i0) {
    return jump_sol.pb[static_cast<size_t>(i0) - 1][0] * x * x;
}

}  // namespace rslq

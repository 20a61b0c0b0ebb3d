#include "rslq/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rslq/matutil.hpp"

namespace rslq {

namespace {

double lerp_nodes(const TimeGrid& grid, const std::vector<double>& nodes, double t) {
    if (t <= 0.0) return nodes.front();
    if (t >= grid.T) return nodes.back();
    double pos = t / grid.dt();
    int k = static_cast<int>(pos);
    if (k >= grid.n_steps) k = grid.n_steps - 1;
    double w = pos - k;
    return (1.0 - w) * nodes[static_cast<size_t>(k)] + w * nodes[static_cast<size_t>(k) + 1];
}

Eigen::VectorXd nhat_slice(const CoefficientSlice& s, const TildeCoefficients& tc,
                           double P) {
    return P * (s.D.transpose() * s.C + tc.B_t) + tc.S;
}

Eigen::MatrixXd rhat_slice(const CoefficientSlice& s, const TildeCoefficients& tc,
                           double P) {
    return tc.R_t + P * s.D.transpose() * s.D;
}

// Quadratic term N'R^{-1}N with the positivity constraint enforced.
double quad_term(const CoefficientSlice& s, const TildeCoefficients& tc, double P,
                 double t, int regime) {
    Eigen::MatrixXd rh = rhat_slice(s, tc, P);
    if (matutil::eig_min(rh) <= matutil::spd_tolerance(rh)) {
        std::ostringstream os;
        os << "R-hat not positive definite at t=" << t << ", regime " << regime;
        throw RhatNotPositiveError(t, regime, os.str());
    }
    Eigen::VectorXd nh = nhat_slice(s, tc, P);
    Eigen::LLT<Eigen::MatrixXd> llt(rh);
    return nh.dot(llt.solve(nh));
}

// Generator of the backward system (dP/dt = -generator).
struct PbmSystem {
    const RegimeModel& model;
    std::vector<CoefficientSlice> slices;      // per regime, current interval
    std::vector<TildeCoefficients> tildes;
    bool linear_only = false;                  // comparison envelope variant
    double t_hint = 0.0;                       // for error messages

    explicit PbmSystem(const RegimeModel& m) : model(m) {
        slices.resize(static_cast<size_t>(m.ell));
        tildes.resize(static_cast<size_t>(m.ell));
    }

    void load_interval(int k) {
        for (int i = 1; i <= model.ell; ++i) {
            slices[static_cast<size_t>(i) - 1] = model.slice(k, i);
            tildes[static_cast<size_t>(i) - 1] = make_tilde(slices[static_cast<size_t>(i) - 1]);
        }
        t_hint = model.grid.node(k + 1);
    }

    Eigen::VectorXd generator(const Eigen::VectorXd& P) const {
        Eigen::VectorXd f(model.ell);
        for (int i = 1; i <= model.ell; ++i) {
            auto iz = static_cast<size_t>(i) - 1;
            const CoefficientSlice& s = slices[iz];
            const TildeCoefficients& tc = tildes[iz];
            double coupling = 0.0;
            for (int j = 0; j < model.ell; ++j)
                coupling += model.generator.q(static_cast<int>(iz), j) * P(j);
            double lin = (2.0 * tc.A_t + s.C.squaredNorm()) * P(static_cast<Eigen::Index>(iz)) +
                         tc.Q_t + coupling;
            if (linear_only) {
                f(static_cast<Eigen::Index>(iz)) = lin;
            } else {
                f(static_cast<Eigen::Index>(iz)) =
                    lin - quad_term(s, tc, P(static_cast<Eigen::Index>(iz)), t_hint, i);
            }
        }
        return f;
    }
};

// Backward RK4 over the whole grid; returns node grids [regime][node].
std::vector<std::vector<double>> integrate_backward(const RegimeModel& model,
                                                    int sub_steps, bool linear_only) {
    if (sub_steps < 1) sub_steps = 1;
    const int ns = model.grid.n_steps;
    const int ell = model.ell;
    std::vector<std::vector<double>> out(
        static_cast<size_t>(ell), std::vector<double>(static_cast<size_t>(ns) + 1, 0.0));

    Eigen::VectorXd P(ell);
    for (int i = 0; i < ell; ++i) P(i) = model.regimes[static_cast<size_t>(i)].G_b;
    for (int i = 0; i < ell; ++i) out[static_cast<size_t>(i)][static_cast<size_t>(ns)] = P(i);

    PbmSystem sys(model);
    sys.linear_only = linear_only;
    const double h = model.grid.dt() / sub_steps;
    // Reversed time: dP/ds = +generator, marching s from 0 to T.
    for (int k = ns - 1; k >= 0; --k) {
        sys.load_interval(k);
        for (int ss = 0; ss < sub_steps; ++ss) {
            Eigen::VectorXd k1 = sys.generator(P);
            Eigen::VectorXd k2 = sys.generator(P + 0.5 * h * k1);
            Eigen::VectorXd k3 = sys.generator(P + 0.5 * h * k2);
            Eigen::VectorXd k4 = sys.generator(P + h * k3);
            P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        for (int i = 0; i < ell; ++i) out[static_cast<size_t>(i)][static_cast<size_t>(k)] = P(i);
    }
    return out;
}

}  // namespace

TildeCoefficients make_tilde(const CoefficientSlice& s) {
    TildeCoefficients tc;
    tc.A_t = s.A - s.lambda * s.E - 0.5 * s.lambda;
    tc.B_t = s.B - s.lambda * s.F;
    double e1 = s.E + 1.0;
    tc.Q_t = s.Q + s.lambda * s.G_a * e1 * e1;
    tc.R_t = s.R + s.lambda * s.G_a * s.F * s.F.transpose();
    tc.S = s.lambda * s.G_a * e1 * s.F;
    return tc;
}

double RiccatiSolution::pb_at(int i, double t) const {
    return lerp_nodes(grid, pb[static_cast<size_t>(i) - 1], t);
}

double JumpSolution::pb_at(int i, double t) const {
    return lerp_nodes(grid, pb[static_cast<size_t>(i) - 1], t);
}

double JumpSolution::ga_at(int i, double t) const {
    return ga_slice[static_cast<size_t>(i) - 1][static_cast<size_t>(grid.slice_index(t))];
}

Eigen::VectorXd nhat(const RegimeModel& model, double t, double P, int i) {
    CoefficientSlice s = model.eval(t, i);
    return nhat_slice(s, make_tilde(s), P);
}

Eigen::MatrixXd rhat(const RegimeModel& model, double t, double P, int i) {
    CoefficientSlice s = model.eval(t, i);
    return rhat_slice(s, make_tilde(s), P);
}

Eigen::VectorXd pbm_rhs(const RegimeModel& model, double t, const Eigen::VectorXd& P) {
    PbmSystem sys(model);
    sys.load_interval(model.grid.slice_index(t));
    sys.t_hint = t;
    return -sys.generator(P);
}

std::vector<std::vector<double>> comparison_upper_bound(const RegimeModel& model,
                                                        int sub_steps) {
    return integrate_backward(model, sub_steps, /*linear_only=*/true);
}

double lower_bound_singular1(const RegimeModel& model) {
    AssumptionCase cs = classify_case(model);
    if (!cs.holds(CaseKind::SingularI))
        throw CaseNoneError("Singular I bound requires a certified Singular I model");
    double delta = cs.delta_for(CaseKind::SingularI);
    double c2 = 0.0;
    for (int i = 1; i <= model.ell; ++i) {
        for (int k = 0; k < model.grid.n_steps; ++k) {
            CoefficientSlice s = model.slice(k, i);
            Eigen::VectorXd v =
                s.D.transpose() * s.C + s.B - s.lambda * s.F;
            Eigen::MatrixXd dtd = s.D.transpose() * s.D;
            double quad = v.dot(matutil::solve_spd(dtd, v));
            double drift = 2.0 * s.A - 2.0 * s.lambda * s.E - s.lambda +
                           s.C.squaredNorm() + model.generator.q(i - 1, i - 1) - quad;
            c2 = std::max(c2, std::abs(drift));
        }
    }
    return delta * std::exp(-c2 * model.grid.T);
}

double lower_bound_singular2(const RegimeModel& model) {
    AssumptionCase cs = classify_case(model);
    if (!cs.holds(CaseKind::SingularIIPrime))
        throw CaseNoneError("Singular II' bound requires a certified Singular II' model");
    double delta = cs.delta_for(CaseKind::SingularIIPrime);
    double c4 = 0.0;
    for (int i = 1; i <= model.ell; ++i) {
        for (int k = 0; k < model.grid.n_steps; ++k) {
            CoefficientSlice s = model.slice(k, i);
            double f = s.F(0);
            double v = (s.D.transpose() * s.C)(0) + s.B(0) - s.lambda * f;
            double drift = 2.0 * s.A - 2.0 * s.lambda * s.E - s.lambda +
                           s.C.squaredNorm() + model.generator.q(i - 1, i - 1) -
                           2.0 / f * v * (s.E + 1.0);
            double quad = v * v / (s.lambda * s.G_a * f * f);
            c4 = std::max({c4, std::abs(drift), quad});
        }
    }
    return 1.0 / ((1.0 + 1.0 / delta) * std::exp(c4 * model.grid.T) - 1.0);
}

RiccatiSolution solve_pbm(const RegimeModel& model, int sub_steps) {
    AssumptionCase cs = classify_case(model);
    if (cs.kind == CaseKind::None)
        throw CaseNoneError(
            "no coefficient-positivity case certified; cannot guarantee R-hat > 0");

    RiccatiSolution sol;
    sol.grid = model.grid;
    sol.ell = model.ell;
    sol.n = model.n;
    sol.case_info = cs;
    sol.lambda_b = Eigen::VectorXd::Zero(model.n);
    sol.pb = integrate_backward(model, sub_steps, /*linear_only=*/false);
    sol.upper = comparison_upper_bound(model, sub_steps);

    bool nonneg_case = cs.holds(CaseKind::Standard) || cs.holds(CaseKind::SingularII);
    // Every certified case contributes its bound; keep the sharpest.
    double lower = 0.0;
    if (cs.holds(CaseKind::SingularI))
        lower = std::max(lower, lower_bound_singular1(model));
    if (cs.holds(CaseKind::SingularIIPrime))
        lower = std::max(lower, lower_bound_singular2(model));
    sol.lower_bound = lower;

    const double slack = 1e-8;
    for (int i = 0; i < model.ell; ++i) {
        for (int k = 0; k <= model.grid.n_steps; ++k) {
            double p = sol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)];
            double up = sol.upper[static_cast<size_t>(i)][static_cast<size_t>(k)];
            // The linear envelope dominates whenever R-hat stays positive.
            if (p > up + slack) {
                std::ostringstream os;
                os << "comparison bound violated at node " << k << ", regime "
                   << i + 1 << ": P=" << p << ", envelope=" << up;
                throw BoundViolationError(os.str());
            }
            if (nonneg_case && p < -slack) {
                std::ostringstream os;
                os << "nonnegativity violated at node " << k << ", regime " << i + 1
                   << ": P=" << p;
                throw BoundViolationError(os.str());
            }
            if (cs.holds(CaseKind::SingularI) || cs.holds(CaseKind::SingularIIPrime)) {
                if (p < lower - slack) {
                    std::ostringstream os;
                    os << "positivity bound violated at node " << k << ", regime "
                       << i + 1 << ": P=" << p << ", bound=" << lower;
                    throw BoundViolationError(os.str());
                }
            }
        }
    }
    return sol;
}

JumpSolution decompose(const RiccatiSolution& sol, const RegimeModel& model) {
    JumpSolution js;
    js.grid = sol.grid;
    js.ell = sol.ell;
    js.pb = sol.pb;
    js.lower_bound = sol.lower_bound;
    js.case_info = sol.case_info;
    js.ga_slice.resize(static_cast<size_t>(model.ell));
    for (int i = 0; i < model.ell; ++i)
        js.ga_slice[static_cast<size_t>(i)] = model.regimes[static_cast<size_t>(i)].G_a;
    return js;
}

double jump_bsde_residual(const JumpSolution& jump_sol, const RegimeModel& model,
                          const RegimePath& path, double tau) {
    (void)path;  // the chain enters only through the realized tau
    const TimeGrid& grid = model.grid;
    const double t_end = std::min(grid.T, tau);
    double worst = 0.0;

    for (int i = 1; i <= model.ell; ++i) {
        for (int k = 0; k < grid.n_steps; ++k) {
            double t0 = grid.node(k);
            if (t0 >= t_end) break;
            double t1 = std::min(grid.node(k + 1), t_end);
            double dt = t1 - t0;
            bool jump_here = (tau > t0 && tau <= t1 && tau <= grid.T);

            CoefficientSlice s = model.slice(k, i);
            double P0 = jump_sol.pb_at(i, t0);
            double U0 = s.G_a - P0;  // slice value of G^a on (t0, t1]

            // Drift of the jump system with the martingale loading zero and
            // P + U collapsed to G^a.
            Eigen::VectorXd nc = P0 * (s.D.transpose() * s.C + s.B) +
                                 s.lambda * s.E * s.F * s.G_a + s.lambda * s.F * U0;
            Eigen::MatrixXd rc = s.R + P0 * s.D.transpose() * s.D +
                                 s.lambda * s.G_a * s.F * s.F.transpose();
            double quad = nc.dot(matutil::solve_spd(rc, nc));
            double coupling = 0.0;
            for (int j = 1; j <= model.ell; ++j)
                coupling += model.generator.q(i - 1, j - 1) * jump_sol.pb_at(j, t0);
            double drift = (2.0 * s.A + s.C.squaredNorm()) * P0 +
                           s.lambda * s.E * s.E * s.G_a + 2.0 * s.lambda * s.E * U0 +
                           s.Q + coupling - quad;

            double p_next = jump_here ? jump_sol.ga_at(i, tau) : jump_sol.pb_at(i, t1);
            double jump_term = jump_here ? (jump_sol.ga_at(i, tau) - jump_sol.pb_at(i, tau)) : 0.0;
            double res = p_next - P0 + (drift + s.lambda * U0) * dt - jump_term;
            worst = std::max(worst, std::abs(res));

            if (jump_here) break;
        }
    }
    return worst;
}

}  // namespace rslq

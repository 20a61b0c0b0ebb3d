#include "rslq/hedging.hpp"

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

}  // namespace

MarketModel make_constant_market(const TimeGrid& grid, const MarkovGenerator& gen,
                                 int m, int n,
                                 const std::vector<ConstantMarketSpec>& specs,
                                 double x0, int i0) {
    MarketModel mk;
    mk.m = m;
    mk.n = n;
    mk.ell = static_cast<int>(specs.size());
    mk.grid = grid;
    mk.generator = gen;
    mk.x0 = x0;
    mk.i0 = i0;
    auto ns = static_cast<size_t>(grid.n_steps);
    for (const ConstantMarketSpec& sp : specs) {
        MarketRegime r;
        r.mu.assign(ns, sp.mu.size() ? sp.mu : Eigen::VectorXd::Zero(m));
        r.sigma.assign(ns, sp.sigma.size() ? sp.sigma : Eigen::MatrixXd::Zero(m, n));
        r.F.assign(ns, sp.F.size() ? sp.F : Eigen::VectorXd::Zero(m));
        r.lambda.assign(ns, sp.lambda);
        r.H_a.assign(ns, sp.H_a);
        r.H_b = sp.H_b;
        mk.regimes.push_back(std::move(r));
    }
    return mk;
}

RegimeModel to_lq(const MarketModel& market) {
    RegimeModel model;
    model.m = market.m;
    model.n = market.n;
    model.ell = market.ell;
    model.grid = market.grid;
    model.generator = market.generator;
    model.x0 = market.x0;
    model.i0 = market.i0;

    auto ns = static_cast<size_t>(market.grid.n_steps);
    double min_eig_ssT = std::numeric_limits<double>::infinity();
    double min_lambda_f2 = std::numeric_limits<double>::infinity();

    for (int i = 0; i < market.ell; ++i) {
        const MarketRegime& mr = market.regimes[static_cast<size_t>(i)];
        RegimeCoefficients rc = RegimeCoefficients::constant(market.m, market.n,
                                                             market.grid.n_steps);
        rc.G_b = 1.0;
        for (size_t k = 0; k < ns; ++k) {
            for (Eigen::Index j = 0; j < mr.F[k].size(); ++j)
                if (mr.F[k](j) < -1.0)
                    throw InvalidModelError("market jump loading below -1");
            rc.B[k] = mr.mu[k];
            rc.D[k] = mr.sigma[k].transpose();
            rc.F[k] = mr.F[k];
            rc.lambda[k] = mr.lambda[k];
            rc.G_a[k] = 1.0;
            Eigen::MatrixXd ssT = mr.sigma[k] * mr.sigma[k].transpose();
            min_eig_ssT = std::min(min_eig_ssT, matutil::eig_min(ssT));
            if (market.m == 1) {
                double f = mr.F[k](0);
                min_lambda_f2 = std::min(min_lambda_f2, mr.lambda[k] * f * f);
            }
        }
        model.regimes.push_back(std::move(rc));
    }

    bool cond_elliptic = min_eig_ssT > 0.0;
    bool cond_jump = (market.m == 1) && min_lambda_f2 > 0.0;
    if (!cond_elliptic && !cond_jump)
        throw CaseNoneError(
            "market is degenerate: needs sigma sigma' > 0, or m = 1 with lambda F^2 > 0");

    ValidationReport rep = validate(model);
    if (!rep.ok()) throw InvalidModelError("mapped market invalid: " + rep.joined());
    return model;
}

RiccatiSolution solve_pmv(const MarketModel& market, int sub_steps) {
    RegimeModel lq = to_lq(market);
    RiccatiSolution sol = solve_pbm(lq, sub_steps);
    // The mapped terminal weight is 1, so a uniformly positive certificate
    // must exist; fail loudly if it does not.
    if (!(sol.lower_bound > 0.0))
        throw BoundViolationError("hedging solve lost the uniform positivity certificate");
    return sol;
}

namespace {

struct KSystem {
    const RegimeModel& lq;
    const std::vector<std::vector<double>>& H_a;  // per regime slice grids
    std::vector<CoefficientSlice> slices;

    KSystem(const RegimeModel& model, const std::vector<std::vector<double>>& ha)
        : lq(model), H_a(ha), slices(static_cast<size_t>(model.ell)) {}

    void load_interval(int k) {
        for (int i = 1; i <= lq.ell; ++i)
            slices[static_cast<size_t>(i) - 1] = lq.slice(k, i);
    }

    // d/ds of the joint reversed-time state (P..., K...), s = T - t.
    Eigen::VectorXd reversed_rhs(int k, const Eigen::VectorXd& y) const {
        const int ell = lq.ell;
        Eigen::VectorXd out(2 * ell);
        for (int i = 0; i < ell; ++i) {
            const CoefficientSlice& s = slices[static_cast<size_t>(i)];
            TildeCoefficients tc = make_tilde(s);
            double P = y(i), K = y(ell + i);
            double ha = H_a[static_cast<size_t>(i)][static_cast<size_t>(k)];

            Eigen::VectorXd nh = P * (s.D.transpose() * s.C + tc.B_t) + tc.S;
            Eigen::MatrixXd rh = tc.R_t + P * s.D.transpose() * s.D;
            if (matutil::eig_min(rh) <= matutil::spd_tolerance(rh))
                throw RhatNotPositiveError(0.0, i + 1,
                                           "payoff system: R-hat not positive definite");
            Eigen::LLT<Eigen::MatrixXd> llt(rh);

            double couple_p = 0.0, couple_k = 0.0;
            for (int j = 0; j < ell; ++j) {
                couple_p += lq.generator.q(i, j) * y(j);
                couple_k += lq.generator.q(i, j) * y(ell + j);
            }
            // dP/ds = generator of the quadratic system.
            double quad = nh.dot(llt.solve(nh));
            out(i) = (2.0 * tc.A_t + s.C.squaredNorm()) * P + tc.Q_t + couple_p - quad;

            // dK/dt = N'R^{-1}(K mu + lambda F (H_a - K)) - lambda (H_a - K) - coupling;
            // reversed time flips the sign.
            Eigen::VectorXd kvec = K * s.B + s.lambda * (ha - K) * s.F;
            double dk_dt = nh.dot(llt.solve(kvec)) - s.lambda * (ha - K) - couple_k;
            out(ell + i) = -dk_dt;
        }
        return out;
    }
};

}  // namespace

std::vector<std::vector<double>> solve_k_system(const MarketModel& market,
                                                const RiccatiSolution& psol,
                                                int sub_steps) {
    RegimeModel lq = to_lq(market);
    const int ell = lq.ell, ns = lq.grid.n_steps;
    std::vector<std::vector<double>> ha(static_cast<size_t>(ell));
    for (int i = 0; i < ell; ++i) ha[static_cast<size_t>(i)] = market.regimes[static_cast<size_t>(i)].H_a;

    std::vector<std::vector<double>> K(
        static_cast<size_t>(ell), std::vector<double>(static_cast<size_t>(ns) + 1, 0.0));

    Eigen::VectorXd y(2 * ell);
    for (int i = 0; i < ell; ++i) {
        y(i) = lq.regimes[static_cast<size_t>(i)].G_b;  // = 1
        y(ell + i) = market.regimes[static_cast<size_t>(i)].H_b;
        K[static_cast<size_t>(i)][static_cast<size_t>(ns)] = y(ell + i);
    }

    KSystem sys(lq, ha);
    if (sub_steps < 1) sub_steps = 1;
    const double h = lq.grid.dt() / sub_steps;
    for (int k = ns - 1; k >= 0; --k) {
        sys.load_interval(k);
        for (int ss = 0; ss < sub_steps; ++ss) {
            Eigen::VectorXd k1 = sys.reversed_rhs(k, y);
            Eigen::VectorXd k2 = sys.reversed_rhs(k, y + 0.5 * h * k1);
            Eigen::VectorXd k3 = sys.reversed_rhs(k, y + 0.5 * h * k2);
            Eigen::VectorXd k4 = sys.reversed_rhs(k, y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        for (int i = 0; i < ell; ++i) {
            // Keep the jointly integrated P in sync with the standalone solve.
            double p_ref = psol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)];
            if (std::abs(y(i) - p_ref) > 1e-9 * (1.0 + std::abs(p_ref)))
                throw BoundViolationError("joint payoff solve drifted from the P grids");
            K[static_cast<size_t>(i)][static_cast<size_t>(k)] = y(ell + i);
        }
    }
    return K;
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
h_transform(const std::vector<std::vector<double>>& K, const RiccatiSolution& psol,
            const MarketModel& market) {
    const int ell = psol.ell, nn = psol.grid.n_nodes();
    std::vector<std::vector<double>> h(static_cast<size_t>(ell),
                                       std::vector<double>(static_cast<size_t>(nn)));
    std::vector<std::vector<double>> gamma = h;
    for (int i = 0; i < ell; ++i) {
        for (int k = 0; k < nn; ++k) {
            double P = psol.pb[static_cast<size_t>(i)][static_cast<size_t>(k)];
            if (!(P > 0.0))
                throw BoundViolationError("h-transform requires P > 0 on the grid");
            double hk = K[static_cast<size_t>(i)][static_cast<size_t>(k)] / P;
            h[static_cast<size_t>(i)][static_cast<size_t>(k)] = hk;
            int slice = std::min(std::max(k - 1, 0), psol.grid.n_steps - 1);
            double ha = market.regimes[static_cast<size_t>(i)].H_a[static_cast<size_t>(slice)];
            gamma[static_cast<size_t>(i)][static_cast<size_t>(k)] = ha - hk;
        }
    }
    return {std::move(h), std::move(gamma)};
}

HedgeSolution solve_hedge(const MarketModel& market, int sub_steps) {
    HedgeSolution sol;
    sol.market = market;
    sol.lq = to_lq(market);
    sol.psol = solve_pbm(sol.lq, sub_steps);
    if (!(sol.psol.lower_bound > 0.0))
        throw BoundViolationError("hedging solve lost the uniform positivity certificate");
    sol.jump = decompose(sol.psol, sol.lq);
    sol.K = solve_k_system(market, sol.psol, sub_steps);
    auto [h, gamma] = h_transform(sol.K, sol.psol, market);
    sol.h = std::move(h);
    (void)gamma;  // reproducible from H_a and h; see gamma_at
    sol.policy = hedge_policy(sol);
    return sol;
}

double HedgeSolution::k_at(int i, double t) const {
    return lerp_nodes(psol.grid, K[static_cast<size_t>(i) - 1], t);
}

double HedgeSolution::h_at(int i, double t) const {
    return lerp_nodes(psol.grid, h[static_cast<size_t>(i) - 1], t);
}

double HedgeSolution::ha_at(int i, double t) const {
    int slice = psol.grid.slice_index(t);
    return market.regimes[static_cast<size_t>(i) - 1].H_a[static_cast<size_t>(slice)];
}

double HedgeSolution::gamma_at(int i, double t) const {
    return ha_at(i, t) - h_at(i, t);
}

Eigen::VectorXd optimal_portfolio(double t, double X, int i, const HedgeSolution& sol) {
    CoefficientSlice s = sol.lq.eval(t, i);
    double P = sol.p_at(i, t);
    double U = 1.0 - P;
    Eigen::MatrixXd rc = P * s.D.transpose() * s.D + s.lambda * s.F * s.F.transpose();
    Eigen::VectorXd nc = P * s.B + s.lambda * U * s.F;
    double gamma = sol.gamma_at(i, t);
    Eigen::VectorXd rhs = nc * (X - sol.h_at(i, t)) - s.lambda * gamma * s.F;
    return -matutil::solve_spd(rc, rhs);
}

FeedbackPolicy hedge_policy(const HedgeSolution& sol) {
    FeedbackPolicy p = build_policy(sol.jump, sol.lq);
    const RegimeModel& lq = sol.lq;
    for (int i = 1; i <= lq.ell; ++i) {
        for (int k = 0; k <= lq.grid.n_steps; ++k) {
            double t = lq.grid.node(k);
            CoefficientSlice s = lq.eval(t, i);
            double P = sol.psol.pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double U = 1.0 - P;
            Eigen::MatrixXd rc = P * s.D.transpose() * s.D +
                                 s.lambda * s.F * s.F.transpose();
            Eigen::VectorXd nc = P * s.B + s.lambda * U * s.F;
            double hk = sol.h[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double gamma = sol.ha_at(i, t) - hk;
            Eigen::VectorXd rhs = nc * hk + s.lambda * gamma * s.F;
            p.offset[static_cast<size_t>(i) - 1][static_cast<size_t>(k)] =
                matutil::solve_spd(rc, rhs);
        }
    }
    return p;
}

double o_term(double t, int i, const HedgeSolution& sol) {
    CoefficientSlice s = sol.lq.eval(t, i);
    if (s.lambda <= 0.0) return 0.0;
    double P = sol.p_at(i, t);
    double gamma = sol.gamma_at(i, t);
    Eigen::MatrixXd ssT = s.D.transpose() * s.D;  // sigma sigma'
    double ratio = matutil::det_ratio_complement(P * ssT, s.lambda, s.F);
    return gamma * gamma * s.lambda * ratio;
}

double HedgeValue::total_se() const {
    return std::sqrt(v_mismatch_se * v_mismatch_se + v_o_se * v_o_se);
}

HedgeValue hedge_value(const HedgeSolution& sol, double x, int i0,
                       std::uint64_t n_chains, std::uint64_t seed) {
    const RegimeModel& lq = sol.lq;
    const TimeGrid& grid = lq.grid;
    HedgeValue hv;
    hv.n_chains = n_chains;
    double h0 = sol.h[static_cast<size_t>(i0) - 1][0];
    hv.v0 = sol.psol.pb[static_cast<size_t>(i0) - 1][0] * (x - h0) * (x - h0);

    auto mismatch_integrand = [&](double t, int slice, int reg) {
        double acc = 0.0;
        double h_reg = sol.h_at(reg, t);
        for (int j = 1; j <= lq.ell; ++j) {
            if (j == reg) continue;
            double dh = sol.h_at(j, t) - h_reg;
            acc += lq.generator.q(reg - 1, j - 1) * sol.p_at(j, t) * dh * dh;
        }
        (void)slice;
        return acc;
    };
    auto o_integrand = [&](double t, int slice, int reg) {
        const RegimeCoefficients& rc = lq.regimes[static_cast<size_t>(reg) - 1];
        auto ks = static_cast<size_t>(slice);
        double lam = rc.lambda[ks];
        if (lam <= 0.0) return 0.0;
        double P = sol.p_at(reg, t);
        double ha = sol.market.regimes[static_cast<size_t>(reg) - 1].H_a[ks];
        double gamma = ha - sol.h_at(reg, t);
        Eigen::MatrixXd ssT = rc.D[ks].transpose() * rc.D[ks];
        double ratio = matutil::det_ratio_complement(P * ssT, lam, rc.F[ks]);
        return gamma * gamma * lam * ratio;
    };

    std::vector<double> mis(n_chains), ov(n_chains);
    for (std::uint64_t c = 0; c < n_chains; ++c) {
        PhiloxRng rng(seed, c);
        RegimePath rp = sample_regime_path(lq.generator, i0, grid.T, rng);
        PiecewiseHazard hz = hazard_along(lq, rp);
        double mi = 0.0, oi = 0.0;
        for (size_t seg = 0; seg + 1 < hz.t.size(); ++seg) {
            double a = hz.t[seg], b = hz.t[seg + 1];
            if (b <= a) continue;
            int slice = grid.slice_index(b);
            int reg = rp.state_at(a);
            double wa = std::exp(-hz.cum[seg]);
            double wb = std::exp(-hz.cum[seg + 1]);
            mi += 0.5 * (b - a) *
                  (mismatch_integrand(a, slice, reg) * wa + mismatch_integrand(b, slice, reg) * wb);
            oi += 0.5 * (b - a) *
                  (o_integrand(a, slice, reg) * wa + o_integrand(b, slice, reg) * wb);
        }
        mis[c] = mi;
        ov[c] = oi;
    }
    auto [mm, mse] = mean_and_se(mis);
    auto [om, ose] = mean_and_se(ov);
    hv.v_mismatch = mm;
    hv.v_mismatch_se = mse;
    hv.v_o = om;
    hv.v_o_se = ose;
    return hv;
}

namespace {

double hedge_terminal(double X, int regime, double tau, const void* ctx) {
    const MarketModel& mk = *static_cast<const MarketModel*>(ctx);
    double H;
    if (tau == kNoJump) {
        H = mk.regimes[static_cast<size_t>(regime) - 1].H_b;
    } else {
        int slice = mk.grid.slice_index(tau);
        H = mk.regimes[static_cast<size_t>(regime) - 1].H_a[static_cast<size_t>(slice)];
    }
    return (X - H) * (X - H);
}

}  // namespace

CostEstimate hedging_error_simulation(const HedgeSolution& sol,
                                      std::uint64_t n_paths, int dt_div,
                                      std::uint64_t seed, int n_threads) {
    std::vector<double> costs =
        per_path_costs(sol.lq, sol.policy, Scheme::Euler, dt_div, n_paths, seed,
                       n_threads, &hedge_terminal, &sol.market);
    auto [mean, se] = mean_and_se(costs);
    CostEstimate ce;
    ce.mean = mean;
    ce.std_error = se;
    ce.n_paths = n_paths;
    ce.scheme = to_string(Scheme::Euler);
    ce.dt = sol.lq.grid.T / dt_div;
    return ce;
}

double h_system_residual(const HedgeSolution& sol) {
    const RegimeModel& lq = sol.lq;
    const TimeGrid& grid = lq.grid;
    double worst = 0.0;
    for (int i = 1; i <= lq.ell; ++i) {
        for (int k = 0; k < grid.n_steps; ++k) {
            double t0 = grid.node(k), t1 = grid.node(k + 1);
            CoefficientSlice s = lq.slice(k, i);
            double P = sol.psol.pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double h0 = sol.h[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double gamma = sol.market.regimes[static_cast<size_t>(i) - 1]
                               .H_a[static_cast<size_t>(k)] -
                           h0;
            Eigen::VectorXd nh = P * s.B + s.lambda * (1.0 - P) * s.F;
            Eigen::MatrixXd rh = P * s.D.transpose() * s.D +
                                 s.lambda * s.F * s.F.transpose();
            double cross = nh.dot(matutil::solve_spd(rh, s.lambda * gamma * s.F));
            double couple = 0.0;
            for (int j = 1; j <= lq.ell; ++j)
                couple += lq.generator.q(i - 1, j - 1) *
                          sol.psol.pb[static_cast<size_t>(j) - 1][static_cast<size_t>(k)] *
                          (sol.h[static_cast<size_t>(j) - 1][static_cast<size_t>(k)] - h0);
            double dh_dt = (cross - s.lambda * (1.0 - P) * gamma - couple) / P -
                           s.lambda * gamma;
            double res = sol.h[static_cast<size_t>(i) - 1][static_cast<size_t>(k) + 1] -
                         h0 - dh_dt * (t1 - t0);
            worst = std::max(worst, std::abs(res));
        }
    }
    return worst;
}

}  // namespace rslq

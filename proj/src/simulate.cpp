#include "rslq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace rslq {

const char* to_string(Scheme s) {
    return s == Scheme::Euler ? "euler" : "exact-log";
}

RegimePath sample_regime_path(const MarkovGenerator& gen, int i0, double T,
                              PhiloxRng& rng) {
    RegimePath rp;
    rp.T = T;
    rp.epochs.push_back(0.0);
    rp.states.push_back(i0);
    double t = 0.0;
    int cur = i0;
    while (true) {
        double rate = -gen.q(cur - 1, cur - 1);
        if (!(rate > 0.0)) break;  // absorbing
        t += rng.exponential() / rate;
        if (t >= T) break;
        double u = rng.uniform01() * rate;
        double acc = 0.0;
        int nxt = cur;
        for (int j = 1; j <= gen.ell; ++j) {
            if (j == cur) continue;
            acc += gen.q(cur - 1, j - 1);
            if (u <= acc) {
                nxt = j;
                break;
            }
        }
        if (nxt == cur) {  // numerical tail: take the last positive-rate target
            for (int j = gen.ell; j >= 1; --j)
                if (j != cur && gen.q(cur - 1, j - 1) > 0.0) {
                    nxt = j;
                    break;
                }
        }
        cur = nxt;
        rp.epochs.push_back(t);
        rp.states.push_back(cur);
    }
    return rp;
}

double PiecewiseHazard::value_at(double s) const {
    if (s <= t.front()) return 0.0;
    if (s >= t.back()) return cum.back();
    size_t lo = 0, hi = t.size() - 1;
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        if (t[mid] <= s) lo = mid; else hi = mid;
    }
    return cum[lo] + rate[lo] * (s - t[lo]);
}

double PiecewiseHazard::invert(double target) const {
    if (target <= 0.0) return t.front();
    for (size_t k = 0; k + 1 < t.size(); ++k) {
        if (cum[k + 1] >= target) {
            if (rate[k] <= 0.0) return t[k + 1];
            return t[k] + (target - cum[k]) / rate[k];
        }
    }
    return kNoJump;
}

PiecewiseHazard hazard_along(const RegimeModel& model, const RegimePath& rp) {
    PiecewiseHazard hz;
    const TimeGrid& grid = model.grid;
    std::vector<double> pts = grid.nodes();
    for (double e : rp.epochs)
        if (e > 0.0 && e < grid.T) pts.push_back(e);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    hz.t = pts;
    hz.rate.resize(pts.size() - 1);
    hz.cum.resize(pts.size(), 0.0);
    for (size_t k = 0; k + 1 < pts.size(); ++k) {
        int slice = grid.slice_index(pts[k + 1]);
        int reg = rp.state_at(pts[k]);
        double lam = model.regimes[static_cast<size_t>(reg) - 1]
                         .lambda[static_cast<size_t>(slice)];
        hz.rate[k] = lam;
        hz.cum[k + 1] = hz.cum[k] + lam * (pts[k + 1] - pts[k]);
    }
    return hz;
}

double sample_jump_time(const RegimeModel& model, const RegimePath& rp,
                        PhiloxRng& rng) {
    double target = rng.exponential();
    return hazard_along(model, rp).invert(target);
}

namespace {

struct StepDraws {
    virtual void brownian(int step, double t0, double t_end, double t_mid_hint,
                          Eigen::VectorXd& dw) = 0;
    virtual ~StepDraws() = default;
};

/// Fresh normals per step, scaled to the step length.
struct RngDraws final : StepDraws {
    PhiloxRng& rng;
    explicit RngDraws(PhiloxRng& r) : rng(r) {}
    void brownian(int, double t0, double t_end, double, Eigen::VectorXd& dw) override {
        double sd = std::sqrt(t_end - t0);
        for (Eigen::Index j = 0; j < dw.size(); ++j) dw(j) = sd * rng.normal();
    }
};

struct PathAccumulator {
    SimulatedPath* record = nullptr;  // optional trajectory recording
    void node0(double t, double X, int reg) {
        if (!record) return;
        record->times.push_back(t);
        record->states.push_back(X);
        record->regimes.push_back(reg);
    }
    void step(double t_end, double X, int reg, const Eigen::VectorXd& u) {
        if (!record) return;
        record->times.push_back(t_end);
        record->states.push_back(X);
        record->regimes.push_back(reg);
        record->controls.push_back(u);
    }
};

struct PathResult {
    double running_cost = 0.0;
    double terminal_cost = 0.0;
    double x_end = 0.0;
    int regime_end = 1;
};

PathResult run_controlled_path(const RegimeModel& model, const FeedbackPolicy& policy,
                               Scheme scheme, int dt_div, const RegimePath& rp,
                               double tau, StepDraws& draws, PathAccumulator& acc,
                               std::uint64_t path_index, TerminalCost terminal,
                               const void* terminal_ctx) {
    const TimeGrid& grid = model.grid;
    const int n_steps = grid.n_steps;
    if (dt_div < n_steps || dt_div % n_steps != 0)
        throw Error("simulate", "dt divisor must be a positive multiple of n_steps");
    if (scheme == Scheme::ExactLog && !policy.is_linear())
        throw Error("simulate", "exact-log scheme requires a linear policy");

    const double T = grid.T;
    const double dt = T / dt_div;
    const int m = model.m, n = model.n;

    double X = model.x0;
    double run_cost = 0.0;
    Eigen::VectorXd u(m), ru(m), diff(n), dw(n), cvec(n);

    acc.node0(0.0, X, rp.state_at(0.0));

    bool jumped = false;
    int reg = model.i0;
    for (int k = 0; k < dt_div; ++k) {
        double t0 = k * dt;
        double t1 = (k + 1 == dt_div) ? T : (k + 1) * dt;
        int slice = static_cast<int>((static_cast<std::int64_t>(k) * n_steps) / dt_div);
        reg = rp.state_at(t0);
        auto rz = static_cast<size_t>(reg) - 1;
        auto ks = static_cast<size_t>(slice);
        const RegimeCoefficients& rc = model.regimes[rz];
        const double A = rc.A[ks], E = rc.E[ks], Q = rc.Q[ks], lam = rc.lambda[ks];
        const Eigen::VectorXd& B = rc.B[ks];
        const Eigen::VectorXd& C = rc.C[ks];
        const Eigen::VectorXd& F = rc.F[ks];
        const Eigen::MatrixXd& D = rc.D[ks];
        const Eigen::MatrixXd& R = rc.R[ks];
        const Eigen::VectorXd& K = policy.gain[rz][ks + 1];
        const Eigen::VectorXd& off = policy.offset[rz][ks + 1];

        bool jump_here = (tau > t0 && tau <= t1);
        double t_end = jump_here ? tau : t1;
        double delta = t_end - t0;

        u.noalias() = -K * X;
        u += off;
        ru.noalias() = R * u;
        run_cost += (Q * X * X + u.dot(ru)) * delta;

        draws.brownian(k, t0, t_end, t0 + 0.5 * dt, dw);

        if (scheme == Scheme::Euler) {
            double drift = A * X + u.dot(B);
            diff.noalias() = C * X;
            diff.noalias() += D * u;
            double jump_load = E * X + u.dot(F);
            double dN = jump_here ? 1.0 : 0.0;
            X += drift * delta + diff.dot(dw) + jump_load * (dN - lam * delta);
        } else {
            double a = A - K.dot(B);
            cvec = C;
            cvec.noalias() -= D * K;
            double e = E - K.dot(F);
            double expo = (a - lam * e - 0.5 * cvec.squaredNorm()) * delta + cvec.dot(dw);
            X *= std::exp(expo);
            if (jump_here) X *= 1.0 + e;
        }

        if (!std::isfinite(X) || std::abs(X) > 1e100) {
            std::ostringstream os;
            os << "state explosion on path " << path_index << " at t=" << t_end;
            throw ExplosionError(os.str());
        }

        acc.step(t_end, X, reg, u);
        if (jump_here) {
            jumped = true;
            reg = rp.state_at(tau);
            break;
        }
    }

    PathResult out;
    out.running_cost = run_cost;
    out.x_end = X;
    out.regime_end = jumped ? rp.state_at(tau) : rp.state_at(T);
    double tau_eff = jumped ? tau : kNoJump;
    if (terminal) {
        out.terminal_cost = terminal(X, out.regime_end, tau_eff, terminal_ctx);
    } else if (jumped) {
        const RegimeCoefficients& rc = model.regimes[static_cast<size_t>(out.regime_end) - 1];
        double ga = rc.G_a[static_cast<size_t>(grid.slice_index(tau))];
        out.terminal_cost = ga * X * X;
    } else {
        out.terminal_cost = model.regimes[static_cast<size_t>(out.regime_end) - 1].G_b * X * X;
    }
    return out;
}

double one_path_cost(const RegimeModel& model, const FeedbackPolicy& policy,
                     Scheme scheme, int dt_div, std::uint64_t seed,
                     std::uint64_t path_index, TerminalCost terminal,
                     const void* terminal_ctx, SimulatedPath* record) {
    PhiloxRng rng(seed, path_index);
    RegimePath rp = sample_regime_path(model.generator, model.i0, model.grid.T, rng);
    double tau = sample_jump_time(model, rp, rng);
    if (tau > model.grid.T) tau = kNoJump;

    RngDraws draws(rng);
    PathAccumulator acc;
    acc.record = record;
    PathResult res = run_controlled_path(model, policy, scheme, dt_div, rp, tau, draws,
                                         acc, path_index, terminal, terminal_ctx);
    if (record) {
        record->regime_path = rp;
        record->tau = tau;
        record->running_cost = res.running_cost;
        record->terminal_cost = res.terminal_cost;
        record->seed = seed;
        record->path_index = path_index;
    }
    return res.running_cost + res.terminal_cost;
}

double pairwise_sum(const double* xs, size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < count; ++i) s += xs[i];
        return s;
    }
    size_t half = count / 2;
    return pairwise_sum(xs, half) + pairwise_sum(xs + half, count - half);
}

}  // namespace

SimulatedPath simulate_path(const RegimeModel& model, const FeedbackPolicy& policy,
                            Scheme scheme, int dt_div, std::uint64_t seed,
                            std::uint64_t path_index) {
    SimulatedPath sp;
    one_path_cost(model, policy, scheme, dt_div, seed, path_index, nullptr, nullptr, &sp);
    return sp;
}

std::vector<double> per_path_costs(const RegimeModel& model,
                                   const FeedbackPolicy& policy, Scheme scheme,
                                   int dt_div, std::uint64_t n_paths,
                                   std::uint64_t seed, int n_threads,
                                   TerminalCost terminal, const void* terminal_ctx) {
    std::vector<double> costs(n_paths, 0.0);
    if (n_threads <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        n_threads = static_cast<int>(std::clamp(hc, 1u, 8u));
    }
    if (n_paths < 256) n_threads = 1;

    auto worker = [&](std::uint64_t lo, std::uint64_t hi, std::exception_ptr& err) {
        try {
            for (std::uint64_t p = lo; p < hi; ++p)
                costs[p] = one_path_cost(model, policy, scheme, dt_div, seed, p,
                                         terminal, terminal_ctx, nullptr);
        } catch (...) {
            err = std::current_exception();
        }
    };

    if (n_threads == 1) {
        std::exception_ptr err;
        worker(0, n_paths, err);
        if (err) std::rethrow_exception(err);
        return costs;
    }

    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<size_t>(n_threads));
    std::uint64_t chunk = (n_paths + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
        std::uint64_t lo = static_cast<std::uint64_t>(w) * chunk;
        std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, n_paths);
        if (lo >= hi) break;
        pool.emplace_back(worker, lo, hi, std::ref(errs[static_cast<size_t>(w)]));
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return costs;
}

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
    const auto n = xs.size();
    double mean = pairwise_sum(xs.data(), n) / static_cast<double>(n);
    if (n < 2) return {mean, 0.0};
    std::vector<double> sq(n);
    for (size_t i = 0; i < n; ++i) sq[i] = (xs[i] - mean) * (xs[i] - mean);
    double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

CostEstimate estimate_cost(const RegimeModel& model, const FeedbackPolicy& policy,
                           std::uint64_t n_paths, int dt_div, std::uint64_t seed,
                           Scheme scheme, int n_threads) {
    if (n_paths < 2) throw Error("simulate", "estimate_cost requires n_paths >= 2");
    std::vector<double> costs =
        per_path_costs(model, policy, scheme, dt_div, n_paths, seed, n_threads);
    auto [mean, se] = mean_and_se(costs);
    CostEstimate ce;
    ce.mean = mean;
    ce.std_error = se;
    ce.n_paths = n_paths;
    ce.scheme = to_string(scheme);
    ce.dt = model.grid.T / dt_div;
    return ce;
}

FeedbackPolicy perturb_policy(const FeedbackPolicy& policy, double magnitude,
                              PhiloxRng& rng) {
    FeedbackPolicy out = policy;
    for (auto& row : out.gain)
        for (auto& g : row)
            for (Eigen::Index j = 0; j < g.size(); ++j)
                g(j) += magnitude * (2.0 * rng.uniform01() - 1.0);
    return out;
}

SuboptimalityReport suboptimality_report(const RegimeModel& model,
                                         const FeedbackPolicy& policy,
                                         int n_perturbations, double magnitude,
                                         std::uint64_t n_paths, int dt_div,
                                         std::uint64_t seed, int n_threads) {
    SuboptimalityReport rep;
    std::vector<double> base =
        per_path_costs(model, policy, Scheme::Euler, dt_div, n_paths, seed, n_threads);
    auto [bm, bse] = mean_and_se(base);
    rep.base_mean = bm;
    rep.base_se = bse;

    std::vector<double> diffs(n_paths);
    for (int p = 0; p < n_perturbations; ++p) {
        // Dedicated perturbation stream, disjoint from the path streams.
        PhiloxRng prng(seed, (1ull << 63) + static_cast<std::uint64_t>(p));
        FeedbackPolicy pert = perturb_policy(policy, magnitude, prng);
        std::vector<double> costs = per_path_costs(model, pert, Scheme::Euler, dt_div,
                                                   n_paths, seed, n_threads);
        for (std::uint64_t i = 0; i < n_paths; ++i) diffs[i] = costs[i] - base[i];
        auto [dm, dse] = mean_and_se(diffs);
        rep.entries.push_back({magnitude, dm, dse});
    }
    return rep;
}

namespace {

/// Coarse-step Brownian increments assembled from the fine draws so that
/// both resolutions see the same underlying path.
struct CoupledDraws final : StepDraws {
    const std::vector<Eigen::VectorXd>& z;  // fine standard normals, 2 per coarse step
    double half_dt;
    bool fine;
    void brownian(int step, double t0, double t_end, double, Eigen::VectorXd& dw) override {
        if (fine) {
            dw = std::sqrt(t_end - t0) * z[static_cast<size_t>(step)];
            return;
        }
        double t_mid = t0 + half_dt;
        const Eigen::VectorXd& z1 = z[2 * static_cast<size_t>(step)];
        const Eigen::VectorXd& z2 = z[2 * static_cast<size_t>(step) + 1];
        if (t_end <= t_mid + 1e-300) {
            dw = std::sqrt(t_end - t0) * z1;
        } else {
            dw = std::sqrt(half_dt) * z1 + std::sqrt(t_end - t_mid) * z2;
        }
    }
    CoupledDraws(const std::vector<Eigen::VectorXd>& zz, double hdt, bool f)
        : z(zz), half_dt(hdt), fine(f) {}
};

}  // namespace

std::pair<double, double> coupled_refinement_diff(const RegimeModel& model,
                                                  const FeedbackPolicy& policy,
                                                  int dt_div_coarse,
                                                  std::uint64_t n_paths,
                                                  std::uint64_t seed) {
    const double T = model.grid.T;
    const int fine_div = 2 * dt_div_coarse;
    std::vector<double> diffs(n_paths);
    std::vector<Eigen::VectorXd> z(static_cast<size_t>(fine_div));

    for (std::uint64_t p = 0; p < n_paths; ++p) {
        PhiloxRng rng(seed, p);
        RegimePath rp = sample_regime_path(model.generator, model.i0, T, rng);
        double tau = sample_jump_time(model, rp, rng);
        if (tau > T) tau = kNoJump;
        for (auto& v : z) {
            v.resize(model.n);
            for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.normal();
        }
        double half_dt = T / fine_div;
        CoupledDraws fine_draws(z, half_dt, true);
        CoupledDraws coarse_draws(z, half_dt, false);
        PathAccumulator noacc;
        PathResult fine = run_controlled_path(model, policy, Scheme::Euler, fine_div,
                                              rp, tau, fine_draws, noacc, p, nullptr,
                                              nullptr);
        PathResult coarse = run_controlled_path(model, policy, Scheme::Euler,
                                                dt_div_coarse, rp, tau, coarse_draws,
                                                noacc, p, nullptr, nullptr);
        diffs[p] = (coarse.running_cost + coarse.terminal_cost) -
                   (fine.running_cost + fine.terminal_cost);
    }
    return mean_and_se(diffs);
}

}  // namespace rslq

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rslq/control.hpp"
#include "rslq/model.hpp"
#include "rslq/path.hpp"
#include "rslq/rng.hpp"

namespace rslq {

enum class Scheme { Euler, ExactLog };

const char* to_string(Scheme s);

/// One realized trajectory of the controlled state on [0, T ^ tau].
struct SimulatedPath {
    RegimePath regime_path;
    double tau = kNoJump;                // jump time, kNoJump if tau > T
    std::vector<double> times;           // step nodes up to T ^ tau
    std::vector<double> states;          // X at the step nodes
    std::vector<int> regimes;            // regime at the step nodes
    std::vector<Eigen::VectorXd> controls;  // control applied on [t_k, t_{k+1})
    double running_cost = 0.0;
    double terminal_cost = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;

    double total_cost() const { return running_cost + terminal_cost; }
};

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_paths = 0;
    std::string scheme;
    double dt = 0.0;
};

/// Exact continuous-time Markov chain sampling: exponential holding times,
/// categorical switch kernel; absorbing when the exit rate vanishes.
RegimePath sample_regime_path(const MarkovGenerator& gen, int i0, double T,
                              PhiloxRng& rng);

/// Integrated intensity of the jump clock along a regime path, piecewise
/// linear with breakpoints at grid nodes and regime switches.
struct PiecewiseHazard {
    std::vector<double> t;     // breakpoints, t.front() = 0, t.back() = T
    std::vector<double> rate;  // constant rate on [t_k, t_{k+1})
    std::vector<double> cum;   // cumulative hazard at each breakpoint

    double value_at(double s) const;
    /// First s with cumulative hazard >= target, or kNoJump.
    double invert(double target) const;
    double total() const { return cum.back(); }
};

PiecewiseHazard hazard_along(const RegimeModel& model, const RegimePath& rp);

/// First event of the inhomogeneous Poisson clock with intensity
/// lambda(t, alpha_t), by exact inversion; kNoJump if it lands past T.
double sample_jump_time(const RegimeModel& model, const RegimePath& rp,
                        PhiloxRng& rng);

/// Simulate one controlled path. `dt_div` is the number of steps over [0, T]
/// and must be a multiple of the grid step count; the step containing tau is
/// split at tau and the unit jump applied there. Throws ExplosionError on
/// non-finite states.
SimulatedPath simulate_path(const RegimeModel& model, const FeedbackPolicy& policy,
                            Scheme scheme, int dt_div, std::uint64_t seed,
                            std::uint64_t path_index);

/// Optional replacement for the terminal cost G X^2 (used by the hedging
/// cross-checks). Arguments: terminal state, regime at the horizon, tau
/// (kNoJump when the clock outlives T).
using TerminalCost = double (*)(double X, int regime, double tau, const void* ctx);

/// Per-path realized total costs for paths [0, n_paths), deterministic in
/// (seed, path index) regardless of the worker count.
std::vector<double> per_path_costs(const RegimeModel& model,
                                   const FeedbackPolicy& policy, Scheme scheme,
                                   int dt_div, std::uint64_t n_paths,
                                   std::uint64_t seed, int n_threads = 0,
                                   TerminalCost terminal = nullptr,
                                   const void* terminal_ctx = nullptr);

/// Monte Carlo estimate of the cost functional under the given policy.
CostEstimate estimate_cost(const RegimeModel& model, const FeedbackPolicy& policy,
                           std::uint64_t n_paths, int dt_div, std::uint64_t seed,
                           Scheme scheme = Scheme::Euler, int n_threads = 0);

/// Mean and standard error of a sample (pairwise summation, fixed order).
std::pair<double, double> mean_and_se(const std::vector<double>& xs);

/// Gain grid plus bounded uniform noise in [-magnitude, magnitude].
FeedbackPolicy perturb_policy(const FeedbackPolicy& policy, double magnitude,
                              PhiloxRng& rng);

struct PerturbationEntry {
    double magnitude = 0.0;
    double mean_diff = 0.0;  // J(perturbed) - J(base), paired mean
    double se_diff = 0.0;    // standard error of the paired differences
};

struct SuboptimalityReport {
    double base_mean = 0.0;
    double base_se = 0.0;
    std::vector<PerturbationEntry> entries;
};

/// Empirical optimality certificate: perturbed policies re-simulated under
/// common random numbers; reports paired cost gaps with standard errors.
SuboptimalityReport suboptimality_report(const RegimeModel& model,
                                         const FeedbackPolicy& policy,
                                         int n_perturbations, double magnitude,
                                         std::uint64_t n_paths, int dt_div,
                                         std::uint64_t seed, int n_threads = 0);

/// Coupled-refinement estimate of J(dt) - J(dt/2): both resolutions driven
/// by the same Brownian increments and the same (regime, tau) draw, so the
/// weak-order trend is visible with few paths.
std::pair<double, double> coupled_refinement_diff(const RegimeModel& model,
                                                  const FeedbackPolicy& policy,
                                                  int dt_div_coarse,
                                                  std::uint64_t n_paths,
                                                  std::uint64_t seed);

}  // namespace rslq

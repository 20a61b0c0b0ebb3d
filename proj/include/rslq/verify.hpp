#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rslq/hedging.hpp"
#include "rslq/model.hpp"

namespace rslq::verify {

/// Reference models for the built-in verification suite. All coefficients
/// are constant in time so closed forms and refinements stay exact.
RegimeModel linear_oracle_model(int n_steps);     // single regime, pure e^{2A(T-t)}
RegimeModel coupled_linear_model(int n_steps);    // two regimes, linear coupling only
MarketModel mv_nojump_market(int n_steps);        // single regime, elliptic, no jumps
MarketModel jump_only_market(int n_steps);        // single asset, sigma = 0
RegimeModel jump_lq_model(int n_steps);           // two regimes, jumps, Standard case
RegimeModel trend_lq_model(int n_steps);          // strong coefficients: visible bias
MarketModel generic_market(int n_steps);          // two regimes, jumps and diffusion
MarketModel constant_payoff_market(int n_steps);  // H identically h0

struct VerifyOptions {
    std::uint64_t seed = 20240801;
    std::uint64_t n_paths = 100000;  // Monte Carlo scale of the heavy criteria
    int dt_div = 2000;
    std::uint64_t n_chains = 20000;  // regime-chain scale of the value formula
    int n_threads = 0;
    bool include_repro_criterion = true;  // criterion 12 re-runs a reduced suite
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CriterionResult> run_all(const VerifyOptions& opts);

std::string render_report(const std::vector<CriterionResult>& results);

inline bool all_pass(const std::vector<CriterionResult>& rs) {
    for (const auto& r : rs)
        if (!r.pass) return false;
    return true;
}

}  // namespace rslq::verify

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rslq/control.hpp"
#include "rslq/hedging.hpp"
#include "rslq/model.hpp"
#include "rslq/riccati.hpp"
#include "rslq/simulate.hpp"

namespace rslq::io {

/// Doubles rendered with 17 significant digits so files round-trip exactly.
std::string fmt17(double x);

/// A model file holds either generic problem data or a market description
/// (detected by the presence of mu/sigma/payoff fields).
struct LoadedModel {
    std::optional<RegimeModel> lq;
    std::optional<MarketModel> market;

    bool is_market() const { return market.has_value(); }
    /// The generic form either way (markets are mapped).
    RegimeModel as_lq() const;
};

LoadedModel load_model_file(const std::string& path);
LoadedModel parse_model_json(const std::string& text, const std::string& origin);

void write_riccati_csv(const std::string& path, const RegimeModel& model,
                       const RiccatiSolution& sol);
void write_policy_csv(const std::string& path, const FeedbackPolicy& policy);
void write_trace_csv(const std::string& path, const std::vector<SimulatedPath>& paths);
void write_hedge_grids_csv(const std::string& path, const HedgeSolution& sol);

struct RunConfig {
    std::string command;  // solve | simulate | hedge | verify
    std::string model_path;
    std::string out_dir = ".";
    std::uint64_t seed = 20240801;
    std::uint64_t n_paths = 100000;
    int dt_div = 2000;
    std::string scheme = "euler";
    double perturb_mag = 0.5;
    int perturb_count = 0;
    int n_threads = 0;  // 0 = auto
};

/// Command bodies; they throw on failure. `dispatch` maps exceptions onto a
/// one-line `error[<category>]: <message>` diagnostic and a nonzero exit.
void run_solve(const RunConfig& cfg);
void run_simulate(const RunConfig& cfg);
void run_hedge(const RunConfig& cfg);
int run_verify(const RunConfig& cfg);  // nonzero when a criterion fails

int dispatch(const RunConfig& cfg);

}  // namespace rslq::io

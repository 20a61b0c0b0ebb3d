#include "rslq/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rslq/matutil.hpp"
#include "rslq/verify.hpp"

namespace rslq::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, const std::string& what) {
    throw ParseError(origin + ": " + what);
}

double require_number(const json& j, const char* field, const std::string& origin) {
    if (!j.contains(field) || !j[field].is_number())
        parse_fail(origin, std::string("missing or non-numeric field '") + field + "'");
    return j[field].get<double>();
}

int require_int(const json& j, const char* field, const std::string& origin) {
    if (!j.contains(field) || !j[field].is_number_integer())
        parse_fail(origin, std::string("missing or non-integer field '") + field + "'");
    return j[field].get<int>();
}

// scalar-or-array coefficient: a number replicates across the grid.
std::vector<double> scalar_grid(const json& j, const char* field, int n_steps,
                                double fallback, const std::string& origin) {
    auto ns = static_cast<size_t>(n_steps);
    if (!j.contains(field)) return std::vector<double>(ns, fallback);
    const json& v = j[field];
    if (v.is_number()) return std::vector<double>(ns, v.get<double>());
    if (v.is_array() && v.size() == ns) {
        std::vector<double> out(ns);
        for (size_t k = 0; k < ns; ++k) {
            if (!v[k].is_number())
                parse_fail(origin, std::string("field '") + field + "' entry " +
                                       std::to_string(k) + " not a number");
            out[k] = v[k].get<double>();
        }
        return out;
    }
    parse_fail(origin, std::string("field '") + field +
                           "' must be a number or an array of length n_steps");
}

Eigen::VectorXd parse_vector(const json& v, int dim, const char* field,
                             const std::string& origin) {
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        parse_fail(origin, std::string("field '") + field + "' needs " +
                               std::to_string(dim) + " numbers");
    Eigen::VectorXd out(dim);
    for (int k = 0; k < dim; ++k) out(k) = v[static_cast<size_t>(k)].get<double>();
    return out;
}

std::vector<Eigen::VectorXd> vector_grid(const json& j, const char* field, int dim,
                                         int n_steps, const std::string& origin) {
    auto ns = static_cast<size_t>(n_steps);
    if (!j.contains(field))
        return std::vector<Eigen::VectorXd>(ns, Eigen::VectorXd::Zero(dim));
    const json& v = j[field];
    if (!v.is_array() || v.empty())
        parse_fail(origin, std::string("field '") + field + "' must be a non-empty array");
    if (v[0].is_number())
        return std::vector<Eigen::VectorXd>(ns, parse_vector(v, dim, field, origin));
    if (v.size() != ns)
        parse_fail(origin, std::string("time-varying '") + field +
                               "' needs n_steps entries");
    std::vector<Eigen::VectorXd> out;
    out.reserve(ns);
    for (size_t k = 0; k < ns; ++k) out.push_back(parse_vector(v[k], dim, field, origin));
    return out;
}

Eigen::MatrixXd parse_matrix(const json& v, int rows, int cols, const char* field,
                             const std::string& origin) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows * cols)
        parse_fail(origin, std::string("field '") + field + "' needs " +
                               std::to_string(rows * cols) + " numbers (row-major)");
    Eigen::MatrixXd out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            out(r, c) = v[static_cast<size_t>(r * cols + c)].get<double>();
    return out;
}

std::vector<Eigen::MatrixXd> matrix_grid(const json& j, const char* field, int rows,
                                         int cols, int n_steps,
                                         const std::string& origin) {
    auto ns = static_cast<size_t>(n_steps);
    if (!j.contains(field))
        return std::vector<Eigen::MatrixXd>(ns, Eigen::MatrixXd::Zero(rows, cols));
    const json& v = j[field];
    if (!v.is_array() || v.empty())
        parse_fail(origin, std::string("field '") + field + "' must be a non-empty array");
    if (v[0].is_number())
        return std::vector<Eigen::MatrixXd>(ns, parse_matrix(v, rows, cols, field, origin));
    if (v.size() != ns)
        parse_fail(origin, std::string("time-varying '") + field +
                               "' needs n_steps entries");
    std::vector<Eigen::MatrixXd> out;
    out.reserve(ns);
    for (size_t k = 0; k < ns; ++k)
        out.push_back(parse_matrix(v[k], rows, cols, field, origin));
    return out;
}

}  // namespace

LoadedModel parse_model_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        parse_fail(origin, e.what());
    }

    double T = require_number(j, "horizon", origin);
    int n_steps = require_int(j, "n_steps", origin);
    int m = require_int(j, "m", origin);
    int n = require_int(j, "n", origin);
    int ell = require_int(j, "ell", origin);
    if (T <= 0.0 || n_steps < 1 || m < 1 || n < 1 || ell < 1)
        parse_fail(origin, "horizon, n_steps, m, n, ell must be positive");

    if (!j.contains("generator") || !j["generator"].is_array() ||
        static_cast<int>(j["generator"].size()) != ell * ell)
        parse_fail(origin, "field 'generator' needs ell*ell numbers (row-major)");
    std::vector<double> qrow;
    for (const auto& v : j["generator"]) qrow.push_back(v.get<double>());

    double x0 = require_number(j, "x0", origin);
    int i0 = require_int(j, "i0", origin);

    if (!j.contains("regimes") || !j["regimes"].is_array() ||
        static_cast<int>(j["regimes"].size()) != ell)
        parse_fail(origin, "field 'regimes' needs ell entries");

    TimeGrid grid(T, n_steps);
    MarkovGenerator gen = MarkovGenerator::from_rows(ell, qrow);

    bool market_form = false;
    for (const auto& r : j["regimes"])
        if (r.contains("mu") || r.contains("sigma") || r.contains("H_b") ||
            r.contains("H_a"))
            market_form = true;

    LoadedModel out;
    if (market_form) {
        MarketModel mk;
        mk.m = m;
        mk.n = n;
        mk.ell = ell;
        mk.grid = grid;
        mk.generator = gen;
        mk.x0 = x0;
        mk.i0 = i0;
        for (int i = 0; i < ell; ++i) {
            const json& r = j["regimes"][static_cast<size_t>(i)];
            std::string rt = origin + ", regime " + std::to_string(i + 1);
            MarketRegime reg;
            reg.mu = vector_grid(r, "mu", m, n_steps, rt);
            reg.sigma = matrix_grid(r, "sigma", m, n, n_steps, rt);
            reg.F = vector_grid(r, "F", m, n_steps, rt);
            reg.lambda = scalar_grid(r, "lambda", n_steps, 0.0, rt);
            reg.H_a = scalar_grid(r, "H_a", n_steps, 0.0, rt);
            reg.H_b = r.contains("H_b") ? require_number(r, "H_b", rt) : 0.0;
            mk.regimes.push_back(std::move(reg));
        }
        out.market = std::move(mk);
    } else {
        RegimeModel model;
        model.m = m;
        model.n = n;
        model.ell = ell;
        model.grid = grid;
        model.generator = gen;
        model.x0 = x0;
        model.i0 = i0;
        for (int i = 0; i < ell; ++i) {
            const json& r = j["regimes"][static_cast<size_t>(i)];
            std::string rt = origin + ", regime " + std::to_string(i + 1);
            RegimeCoefficients rc;
            rc.A = scalar_grid(r, "A", n_steps, 0.0, rt);
            rc.E = scalar_grid(r, "E", n_steps, 0.0, rt);
            rc.Q = scalar_grid(r, "Q", n_steps, 0.0, rt);
            rc.G_a = scalar_grid(r, "G_a", n_steps, 0.0, rt);
            rc.lambda = scalar_grid(r, "lambda", n_steps, 0.0, rt);
            rc.B = vector_grid(r, "B", m, n_steps, rt);
            rc.F = vector_grid(r, "F", m, n_steps, rt);
            rc.C = vector_grid(r, "C", n, n_steps, rt);
            rc.D = matrix_grid(r, "D", n, m, n_steps, rt);
            rc.R = matrix_grid(r, "R", m, m, n_steps, rt);
            rc.G_b = r.contains("G_b") ? require_number(r, "G_b", rt) : 0.0;
            model.regimes.push_back(std::move(rc));
        }
        out.lq = std::move(model);
    }
    return out;
}

LoadedModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_json(ss.str(), path);
}

RegimeModel LoadedModel::as_lq() const {
    if (lq) return *lq;
    return to_lq(*market);
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // '\n' endings on every platform
    if (!out) throw Error("io", "cannot open output file: " + path);
    return out;
}

void validated_or_throw(const RegimeModel& model) {
    ValidationReport rep = validate(model);
    if (!rep.ok()) throw InvalidModelError(rep.joined());
}

}  // namespace

void write_riccati_csv(const std::string& path, const RegimeModel& model,
                       const RiccatiSolution& sol) {
    std::ofstream out = open_out(path);
    out << "t,regime,P_b,upper_bound,rhat_eig_min\n";
    for (int k = 0; k <= model.grid.n_steps; ++k) {
        double t = model.grid.node(k);
        for (int i = 1; i <= model.ell; ++i) {
            double p = sol.pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double up = sol.upper[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double emin = matutil::eig_min(rhat(model, t, p, i));
            out << fmt17(t) << ',' << i << ',' << fmt17(p) << ',' << fmt17(up) << ','
                << fmt17(emin) << '\n';
        }
    }
}

void write_policy_csv(const std::string& path, const FeedbackPolicy& policy) {
    std::ofstream out = open_out(path);
    out << "t,regime";
    for (int c = 1; c <= policy.m; ++c) out << ",k_" << c;
    out << '\n';
    for (int k = 0; k <= policy.grid.n_steps; ++k) {
        double t = policy.grid.node(k);
        for (int i = 1; i <= policy.ell; ++i) {
            out << fmt17(t) << ',' << i;
            const Eigen::VectorXd& g = policy.gain_node(i, k);
            for (Eigen::Index c = 0; c < g.size(); ++c) out << ',' << fmt17(g(c));
            out << '\n';
        }
    }
}

void write_trace_csv(const std::string& path, const std::vector<SimulatedPath>& paths) {
    std::ofstream out = open_out(path);
    int m = paths.empty() || paths[0].controls.empty()
                ? 1
                : static_cast<int>(paths[0].controls[0].size());
    out << "path,t,regime,jumped,X";
    for (int c = 1; c <= m; ++c) out << ",u_" << c;
    out << '\n';
    for (const SimulatedPath& sp : paths) {
        for (size_t k = 0; k < sp.times.size(); ++k) {
            bool jumped = sp.tau != kNoJump && sp.times[k] >= sp.tau;
            out << sp.path_index << ',' << fmt17(sp.times[k]) << ',' << sp.regimes[k]
                << ',' << (jumped ? 1 : 0) << ',' << fmt17(sp.states[k]);
            // the control applied on the step starting here (none at the last node)
            const Eigen::VectorXd* u = k < sp.controls.size() ? &sp.controls[k] : nullptr;
            for (int c = 0; c < m; ++c) out << ',' << (u ? fmt17((*u)(c)) : "0");
            out << '\n';
        }
    }
}

void write_hedge_grids_csv(const std::string& path, const HedgeSolution& sol) {
    std::ofstream out = open_out(path);
    out << "t,regime,P,K,h,gamma\n";
    const TimeGrid& grid = sol.psol.grid;
    for (int k = 0; k <= grid.n_steps; ++k) {
        double t = grid.node(k);
        for (int i = 1; i <= sol.psol.ell; ++i) {
            double p = sol.psol.pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double kk = sol.K[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double hh = sol.h[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            out << fmt17(t) << ',' << i << ',' << fmt17(p) << ',' << fmt17(kk) << ','
                << fmt17(hh) << ',' << fmt17(sol.ha_at(i, t) - hh) << '\n';
        }
    }
}

void run_solve(const RunConfig& cfg) {
    LoadedModel lm = load_model_file(cfg.model_path);
    RegimeModel model = lm.as_lq();
    validated_or_throw(model);
    AssumptionCase cs = classify_case(model);
    if (cs.kind == CaseKind::None)
        throw CaseNoneError(
            "no assumption case certified (needs R > 0, or G > 0 with D'D > 0, or "
            "m = 1 with G_a > 0 and lambda F^2 > 0)");

    RiccatiSolution sol = solve_pbm(model);
    fs::create_directories(cfg.out_dir);
    write_riccati_csv(cfg.out_dir + "/riccati.csv", model, sol);

    double pb_min = std::numeric_limits<double>::infinity(), pb_max = -pb_min;
    double slack_min = std::numeric_limits<double>::infinity();
    double rhat_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= model.grid.n_steps; ++k) {
        double t = model.grid.node(k);
        for (int i = 1; i <= model.ell; ++i) {
            double p = sol.pb[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            double up = sol.upper[static_cast<size_t>(i) - 1][static_cast<size_t>(k)];
            pb_min = std::min(pb_min, p);
            pb_max = std::max(pb_max, p);
            slack_min = std::min(slack_min, up - p);
            rhat_min = std::min(rhat_min, matutil::eig_min(rhat(model, t, p, i)));
        }
    }

    std::ofstream rep = open_out(cfg.out_dir + "/solve_report.txt");
    rep << "case = " << to_string(cs.kind) << '\n';
    rep << "delta = " << fmt17(cs.delta) << '\n';
    for (const auto& [kind, d] : cs.satisfied)
        rep << "satisfied_" << to_string(kind) << " = " << fmt17(d) << '\n';
    rep << "lower_bound = " << fmt17(sol.lower_bound) << '\n';
    rep << "pb_min = " << fmt17(pb_min) << '\n';
    rep << "pb_max = " << fmt17(pb_max) << '\n';
    rep << "upper_envelope_slack_min = " << fmt17(slack_min) << '\n';
    rep << "rhat_eig_min = " << fmt17(rhat_min) << '\n';
    std::cout << "solve: case " << to_string(cs.kind) << ", wrote " << cfg.out_dir
              << "/riccati.csv" << std::endl;
}

void run_simulate(const RunConfig& cfg) {
    LoadedModel lm = load_model_file(cfg.model_path);
    RegimeModel model = lm.as_lq();
    validated_or_throw(model);
    Scheme scheme;
    if (cfg.scheme == "euler") scheme = Scheme::Euler;
    else if (cfg.scheme == "exact-log") scheme = Scheme::ExactLog;
    else throw Error("config", "unknown scheme: " + cfg.scheme);

    RiccatiSolution sol = solve_pbm(model);
    JumpSolution jump = decompose(sol, model);
    FeedbackPolicy policy = build_policy(jump, model);

    fs::create_directories(cfg.out_dir);
    write_policy_csv(cfg.out_dir + "/policy.csv", policy);

    CostEstimate ce = estimate_cost(model, policy, cfg.n_paths, cfg.dt_div, cfg.seed,
                                    scheme, cfg.n_threads);
    double v = optimal_value(jump, model.x0, model.i0);

    std::ofstream rep = open_out(cfg.out_dir + "/cost_report.txt");
    rep << "mean = " << fmt17(ce.mean) << '\n';
    rep << "std_error = " << fmt17(ce.std_error) << '\n';
    rep << "n_paths = " << ce.n_paths << '\n';
    rep << "scheme = " << ce.scheme << '\n';
    rep << "dt = " << fmt17(ce.dt) << '\n';
    rep << "optimal_value = " << fmt17(v) << '\n';
    rep << "abs_gap = " << fmt17(std::abs(ce.mean - v)) << '\n';

    if (cfg.perturb_count > 0) {
        SuboptimalityReport sub =
            suboptimality_report(model, policy, cfg.perturb_count, cfg.perturb_mag,
                                 cfg.n_paths, cfg.dt_div, cfg.seed, cfg.n_threads);
        rep << "perturbations = " << cfg.perturb_count << '\n';
        rep << "perturb_magnitude = " << fmt17(cfg.perturb_mag) << '\n';
        for (size_t p = 0; p < sub.entries.size(); ++p) {
            const PerturbationEntry& e = sub.entries[p];
            rep << "perturb_" << p << "_gap = " << fmt17(e.mean_diff) << " +/- "
                << fmt17(e.se_diff) << '\n';
        }
    }
    std::cout << "simulate: J = " << fmt17(ce.mean) << " +/- " << fmt17(ce.std_error)
              << " vs optimal " << fmt17(v) << std::endl;
}

void run_hedge(const RunConfig& cfg) {
    LoadedModel lm = load_model_file(cfg.model_path);
    if (!lm.is_market())
        throw Error("config",
                    "hedge needs a market model file (mu/sigma/payoff fields)");
    const MarketModel& market = *lm.market;
    HedgeSolution sol = solve_hedge(market);
    HedgeValue hv = hedge_value(sol, market.x0, market.i0,
                                std::max<std::uint64_t>(cfg.n_paths / 5, 2), cfg.seed);
    CostEstimate sim = hedging_error_simulation(sol, cfg.n_paths, cfg.dt_div, cfg.seed,
                                                cfg.n_threads);

    fs::create_directories(cfg.out_dir);
    write_hedge_grids_csv(cfg.out_dir + "/hedge_grids.csv", sol);
    std::ofstream rep = open_out(cfg.out_dir + "/hedge_report.txt");
    rep << "v0 = " << fmt17(hv.v0) << '\n';
    rep << "v_mismatch = " << fmt17(hv.v_mismatch) << " +/- " << fmt17(hv.v_mismatch_se)
        << '\n';
    rep << "v_O = " << fmt17(hv.v_o) << " +/- " << fmt17(hv.v_o_se) << '\n';
    rep << "v_total = " << fmt17(hv.total()) << '\n';
    rep << "simulated_error = " << fmt17(sim.mean) << " +/- " << fmt17(sim.std_error)
        << '\n';
    for (int i = 1; i <= market.ell; ++i)
        rep << "h0_regime_" << i << " = "
            << fmt17(sol.h[static_cast<size_t>(i) - 1][0]) << '\n';
    std::cout << "hedge: formula " << fmt17(hv.total()) << ", simulated "
              << fmt17(sim.mean) << " +/- " << fmt17(sim.std_error) << std::endl;
}

int run_verify(const RunConfig& cfg) {
    verify::VerifyOptions opts;
    opts.seed = cfg.seed;
    opts.n_paths = cfg.n_paths;
    opts.dt_div = cfg.dt_div;
    opts.n_threads = cfg.n_threads;
    auto results = verify::run_all(opts);
    std::string report = verify::render_report(results);
    fs::create_directories(cfg.out_dir);
    std::ofstream rep = open_out(cfg.out_dir + "/verify_report.txt");
    rep << report;
    std::cout << report;
    return verify::all_pass(results) ? 0 : 1;
}

int dispatch(const RunConfig& cfg) {
    try {
        if (cfg.dt_div <= 0 || cfg.n_paths == 0 || cfg.perturb_count < 0 ||
            cfg.perturb_mag < 0.0)
            throw Error("config", "numeric parameters must be positive");
        if (cfg.command == "solve") {
            run_solve(cfg);
            return 0;
        }
        if (cfg.command == "simulate") {
            run_simulate(cfg);
            return 0;
        }
        if (cfg.command == "hedge") {
            run_hedge(cfg);
            return 0;
        }
        if (cfg.command == "verify") return run_verify(cfg);
        std::cerr << "error[config]: unknown command: " << cfg.command << std::endl;
        return 2;
    } catch (const Error& e) {
        std::cerr << "error[" << e.category() << "]: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << std::endl;
        return 1;
    }
}

}  // namespace rslq::io

#include <CLI11.hpp>

#include "rslq/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "rslq: regime-switching linear-quadratic control on a random horizon -- "
        "solver, simulator, and mean-variance hedging toolkit"};
    app.require_subcommand(1);

    rslq::io::RunConfig cfg;

    auto add_common = [&](CLI::App* sub, bool needs_model) {
        if (needs_model)
            sub->add_option("--model", cfg.model_path, "model file (JSON)")->required();
        sub->add_option("--out", cfg.out_dir, "output directory")
            ->default_val(std::string("."));
        sub->add_option("--seed", cfg.seed, "random seed")->default_val(20240801ull);
        sub->add_option("--paths", cfg.n_paths, "Monte Carlo path count")
            ->default_val(100000ull);
        sub->add_option("--dt-div", cfg.dt_div,
                        "time steps over [0,T] (multiple of the model grid)")
            ->default_val(2000);
        sub->add_option("--scheme", cfg.scheme, "euler | exact-log")
            ->default_val(std::string("euler"));
        sub->add_option("--threads", cfg.n_threads, "worker threads (0 = auto)")
            ->default_val(0);
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the backward system, dump grids");
    add_common(solve, true);

    CLI::App* sim = app.add_subcommand(
        "simulate", "solve, build the optimal feedback, estimate the cost by Monte Carlo");
    add_common(sim, true);
    sim->add_option("--perturb-mag", cfg.perturb_mag, "gain perturbation magnitude")
        ->default_val(0.5);
    sim->add_option("--perturb-count", cfg.perturb_count,
                    "number of perturbed policies to compare (0 = skip)")
        ->default_val(0);

    CLI::App* hedge = app.add_subcommand(
        "hedge", "solve the mean-variance hedging problem for a market model");
    add_common(hedge, true);

    CLI::App* verify = app.add_subcommand(
        "verify", "run the built-in verification suite on reference models");
    add_common(verify, false);

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) cfg.command = "solve";
    if (sim->parsed()) cfg.command = "simulate";
    if (hedge->parsed()) cfg.command = "hedge";
    if (verify->parsed()) cfg.command = "verify";

    return rslq::io::dispatch(cfg);
}

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pcsc/cli.hpp"
#include "pcsc/errors.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::optional<double> grid_step;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON experiment config")->required();
    cmd->add_option("--out", opts.out_path, "output path (default: stdout)");
    cmd->add_option("--seed", opts.seed, "override the solver/simulation seed");
    cmd->add_option("--threads", opts.threads, "worker thread count");
    cmd->add_option("--grid-step", opts.grid_step, "override the oracle grid step");
}

int dispatch(const CommonOpts& opts,
             int (*runner)(const pcsc::cli::ExperimentConfig&, std::ostream&, unsigned),
             const std::string* curve_kind) {
    pcsc::cli::ExperimentConfig cfg = pcsc::cli::load_config(opts.config_path);
    if (opts.seed) cfg.solver.seed = *opts.seed;
    if (opts.grid_step) cfg.solver.grid_step = *opts.grid_step;

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!opts.out_path.empty()) {
        file.open(opts.out_path, std::ios::binary);
        if (!file) throw pcsc::UsageError("cannot open output path: " + opts.out_path);
        out = &file;
    }
    if (curve_kind != nullptr) {
        return pcsc::cli::run_curve(cfg, *curve_kind, *out, opts.threads);
    }
    return runner(cfg, *out, opts.threads);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rate-distortion-privacy region calculator and block-coding simulator"};
    app.require_subcommand(1);

    CommonOpts curve_opts, table_opts, sim_opts, verify_opts;
    std::string curve_kind = "rd";

    CLI::App* curve = app.add_subcommand("curve", "R(D) or minimum-leakage curve as CSV");
    curve->add_option("--kind", curve_kind, "rd or ld")->check(CLI::IsMember({"rd", "ld"}));
    add_common(curve, curve_opts);

    CLI::App* table = app.add_subcommand("table", "per-case (D, L*, R at L*) table as CSV");
    add_common(table, table_opts);

    CLI::App* simulate = app.add_subcommand("simulate", "block-coding simulation as JSON");
    add_common(simulate, sim_opts);

    CLI::App* verify = app.add_subcommand("verify", "lemma/convexity/ordering checks as JSON");
    add_common(verify, verify_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (curve->parsed()) return dispatch(curve_opts, nullptr, &curve_kind);
        if (table->parsed()) return dispatch(table_opts, pcsc::cli::run_table, nullptr);
        if (simulate->parsed()) return dispatch(sim_opts, pcsc::cli::run_simulate, nullptr);
        return dispatch(verify_opts, pcsc::cli::run_verify, nullptr);
    } catch (const pcsc::BudgetError& ex) {
        std::fprintf(stderr, "budget refused: %s (required %.3g, budget %.3g)\n", ex.what(),
                     ex.required_cells, ex.budget_cells);
        return 3;
    } catch (const pcsc::ConvergenceError& ex) {
        std::fprintf(stderr, "solver did not converge: %s (gap %.3g)\n", ex.what(),
                     ex.final_gap);
        return 4;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
}

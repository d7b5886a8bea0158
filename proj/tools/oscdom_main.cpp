#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oscdom/config.hpp"
#include "oscdom/suites.hpp"

int main(int argc, char** argv) {
    CLI::App app{"oscdom: sparse domination and pointwise Sobolev laboratory"};
    app.require_subcommand(1);

    std::string suite, config_path, out_dir, operator_label, report_dir;
    int dim = 0;
    long long grid_n = 0;
    unsigned long long seed_arg = 0;
    double lambda = 0.0, eta_target = 0.0;
    int max_depth = 0, rings = 0;

    CLI::App* run = app.add_subcommand("run", "run a verification suite");
    run->add_option("suite", suite,
                    "one of: stats-oracles, kernel-audit, prop-cr, sparse-mr, "
                    "sparse-spd-compare, sobolev, necessity-probe")
        ->required();
    run->add_option("--config", config_path, "TOML config file");
    run->add_option("--n", dim, "dimension (1 or 2)");
    run->add_option("--grid", grid_n, "cells per axis");
    auto* seed_opt = run->add_option("--seed", seed_arg, "experiment seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--operator", operator_label, "operator label");
    run->add_option("--lambda", lambda, "engine lambda override");
    run->add_option("--max-depth", max_depth, "engine tree depth / round budget");
    run->add_option("--rings", rings, "ring count for the global assembly");
    run->add_option("--eta-target", eta_target, "target sparseness constant");

    CLI::App* report = app.add_subcommand("report", "summarize a results directory");
    report->add_option("dir", report_dir, "directory with *_summary.json files")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            oscdom::ExperimentConfig cfg;
            if (!config_path.empty()) cfg = oscdom::load_config(config_path);
            if (dim != 0) cfg.dim = dim;
            if (grid_n != 0) cfg.grid_n = grid_n;
            if (seed_opt->count() > 0) cfg.seed = seed_arg;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (!operator_label.empty()) cfg.operator_label = operator_label;
            if (lambda != 0.0) cfg.engine.lambda = lambda;
            if (max_depth != 0) cfg.engine.max_depth = max_depth;
            if (rings != 0) cfg.engine.rings = rings;
            if (eta_target != 0.0) cfg.engine.target_eta = eta_target;

            const oscdom::SuiteResult res = oscdom::run_suite(suite, cfg);
            for (const auto& c : res.checks)
                std::printf("[%s] %s %s%s%s\n", c.pass ? "PASS" : "FAIL",
                            res.suite.c_str(), c.name.c_str(),
                            c.detail.empty() ? "" : "  ", c.detail.c_str());
            return res.pass() ? 0 : 1;
        }
        std::cout << oscdom::report_directory(report_dir);
        return 0;
    } catch (const oscdom::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

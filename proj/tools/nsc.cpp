#include "nsc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Online non-stochastic control of continuous-time linear systems"};
    app.require_subcommand(1);

    nsc::RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run the controller (and baseline) on a config");
    run->add_option("config", run_args.config, "Config file, or builtin:<name>")->required();
    run->add_option("--csv", run_args.csv, "Per-sample CSV log path");
    run->add_option("--svg", run_args.svg, "SVG plot path");
    run->add_option("--checkpoint", run_args.checkpoint, "Final parameter checkpoint path");
    run->add_option("--summary", run_args.summary, "Summary JSON path");
    run->add_flag("--no-baseline", run_args.no_baseline, "Skip the hindsight baseline and regret diagnostics");

    nsc::SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Repeat a run over values of one parameter");
    sweep->add_option("config", sweep_args.config, "Config file, or builtin:<name>")->required();
    sweep->add_option("--param", sweep_args.param, "T, h, H, m, eta or seed")->required();
    sweep->add_option("--values", sweep_args.values, "Comma-separated values")->required()->delimiter(',');
    sweep->add_option("--jobs", sweep_args.jobs, "Worker threads (default: hardware threads)");
    sweep->add_option("--csv", sweep_args.csv, "Table path (default sweep_<param>.csv)");
    sweep->add_option("--svg", sweep_args.svg, "Plot path (default sweep_<param>.svg)");

    std::string baseline_config;
    auto* baseline = app.add_subcommand("baseline", "Best linear gain in hindsight");
    baseline->add_option("config", baseline_config, "Config file, or builtin:<name>")->required();

    std::string suite = "all";
    nsc::VerifyOptions verify_opts;
    auto* verify = app.add_subcommand("verify", "Numeric property checks");
    verify->add_option("suite", suite, "lemmas, gradients, stability or all");
    verify->add_flag("--fd", verify_opts.force_fd, "Use finite-difference cost gradients");
    verify->add_flag("--tamper-decay", verify_opts.tamper_decay, "Evaluate the transition bound with the wrong decay");

    std::string plot_csv, plot_svg;
    auto* plot = app.add_subcommand("plot", "Render a run or sweep CSV as SVG");
    plot->add_option("csv", plot_csv, "Input CSV")->required();
    plot->add_option("--out", plot_svg, "Output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nsc::kExitConfig;
    }

    if (*run) return nsc::cmd_run(run_args, std::cout, std::cerr);
    if (*sweep) return nsc::cmd_sweep(sweep_args, std::cout, std::cerr);
    if (*baseline) return nsc::cmd_baseline(baseline_config, std::cout, std::cerr);
    if (*verify) return nsc::cmd_verify(suite, verify_opts, std::cout, std::cerr);
    if (*plot) return nsc::cmd_plot(plot_csv, plot_svg, std::cout, std::cerr);
    return nsc::kExitFailure;
}

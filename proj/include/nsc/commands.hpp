#pragma once

#include "nsc/verify.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nsc {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitDivergence = 3,
    kExitInfeasible = 4,
};

/// Maps the exception in flight to an exit code and prints "error: ..." to `err`.
/// Must be called from inside a catch block.
int exit_code_for_current_exception(std::ostream& err);

/// A config path, or "builtin:<name>" for a built-in benchmark.
nlohmann::json load_config_or_builtin(const std::string& spec);

struct RunArgs {
    std::string config;
    /// Overrides for the config's output section; empty keeps the config value.
    std::string csv;
    std::string svg;
    std::string checkpoint;
    std::string summary;
    bool no_baseline = false;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

struct SweepArgs {
    std::string config;
    std::string param;
    std::vector<double> values;
    int jobs = 0;  ///< 0: hardware threads
    std::string csv;
    std::string svg;
};

struct SweepRow {
    double value = 0.0;
    std::string status = "ok";
    double T = 0.0, h = 0.0;
    int H = 0, m = 0;
    double J_alg = 0.0, J_star = 0.0, regret = 0.0;
    double R0 = 0.0, R1 = 0.0, R2 = 0.0, R3 = 0.0;
    double identity_residual = 0.0;
    double wall_time = 0.0;
};

/// Runs one configuration per value, in parallel; row order follows `values`.
std::vector<SweepRow> run_sweep(const nlohmann::json& doc, const std::string& param, const std::vector<double>& values,
                                int jobs, std::optional<std::uint64_t> seed_override);

/// Sweep table; wall_time is the only column that differs between repeated sweeps.
std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows);

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

int cmd_baseline(const std::string& config, std::ostream& out, std::ostream& err);

int cmd_verify(const std::string& suite, const VerifyOptions& opts, std::ostream& out, std::ostream& err);

/// Plots a run CSV (cumulative cost and states) or a sweep CSV (log-log regret).
int cmd_plot(const std::string& csv, const std::string& svg, std::ostream& out, std::ostream& err);

}  // namespace nsc

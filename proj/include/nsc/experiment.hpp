#pragma once

#include "nsc/bench.hpp"
#include "nsc/config.hpp"
#include "nsc/controller.hpp"
#include "nsc/regret.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace nsc {

struct ExperimentOutcome {
    RunLog log;
    std::optional<BaselineResult> baseline;
    std::optional<RegretReport> regret;
    /// Cost of K* under continuous feedback, when requested.
    std::optional<double> J_star_continuous;
};

/// Best linear gain in hindsight on the experiment's replay, in the configured comparator class.
BaselineResult compute_baseline(const Experiment& ex);

/// Controller run, plus baseline and regret diagnostics when `with_baseline` and enabled.
ExperimentOutcome run_experiment(const Experiment& ex, bool with_baseline = true);

nlohmann::json summary_json(const Experiment& ex, const ExperimentOutcome& out);

/// Cumulative cost, running regret and running R0 / h R1 terms against time.
std::string run_svg(const Experiment& ex, const ExperimentOutcome& out);

}  // namespace nsc

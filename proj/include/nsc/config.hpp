#pragma once

#include "nsc/controller.hpp"
#include "nsc/cost.hpp"
#include "nsc/linsys.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace nsc {

/// Malformed or out-of-schema configuration. The message starts with the field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct BaselineSettings {
    enum class Method { NelderMead, Grid };
    bool enabled = true;
    Method method = Method::NelderMead;
    int multistarts = 8;
    std::uint64_t seed = 0x6a09e667f3bcc909ULL;
    /// Comparator class; unset means the run's own certificate.
    std::optional<double> kappa;
    std::optional<double> gamma;
    /// Scalar grid search, method == Grid only.
    double grid_min = 0.0;
    double grid_max = 0.0;
    double grid_step = 0.0;
    /// Also report the cost of K* under continuous feedback.
    bool continuous_feedback = false;
    double regret_tol = 1e-8;
    int regret_max_iter = 2000;
};

struct OutputSettings {
    std::string csv;
    std::string svg;
    std::string checkpoint;
    std::string summary;
};

struct Experiment {
    SystemDynamics sys;
    DisturbanceSignal dist;
    CostFn cost;
    ControllerConfig controller;
    BaselineSettings baseline;
    OutputSettings output;
};

nlohmann::json load_config(const std::string& path);

/// Validates the document against the strict schema and resolves "auto" fields.
/// `seed_override` replaces every seed in the document.
Experiment resolve_experiment(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Sets one sweepable parameter (T, h, H, m, eta, seed) in a config document.
void apply_parameter(nlohmann::json& doc, const std::string& name, double value);

/// NSC_SEED_OVERRIDE, if set and parseable.
std::optional<std::uint64_t> seed_override_from_env();

}  // namespace nsc

#include "nsc/benchmarks.hpp"

#include "nsc/linalg.hpp"

namespace nsc {

using nlohmann::json;

namespace {

json scalar_doc() {
    return json::parse(R"({
  "system": {"A": [[1.0]], "B": [[1.0]]},
  "disturbance": {
    "kind": "sinusoid",
    "params": {"amplitude": 0.5, "omega": 1.0, "phase": 0.0, "direction": [1.0]},
    "W": 0.5,
    "seed": 0
  },
  "cost": {"kind": "quadratic", "Q": [[1.0]], "R": [[1.0]]},
  "controller": {
    "T": 50,
    "K": [[2.0]],
    "h": "auto",
    "H": "auto",
    "m": "auto",
    "eta": "auto",
    "decay_base": "1-h*gamma",
    "substeps": 64
  },
  "baseline": {"enabled": true, "method": "nelder-mead", "multistarts": 8, "kappa": 10.0, "gamma": 0.01, "seed": 1},
  "output": {"csv": "scalar.csv", "svg": "scalar.svg", "summary": "scalar_summary.json", "checkpoint": "scalar.ckpt"}
})");
}

json planar_doc() {
    return json::parse(R"({
  "system": {"A": [[0.0, 1.0], [-1.2, -0.2]], "B": [[1.0, 0.0], [0.0, 1.0]]},
  "disturbance": {
    "kind": "sum_of_sinusoids",
    "params": {"tones": [{"amplitude": 0.5, "omega": 0.2}, {"amplitude": 0.5, "omega": 0.25}]},
    "W": 0.5,
    "seed": 7
  },
  "cost": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0, 0.0], [0.0, 1.0]]},
  "controller": {
    "T": 256,
    "K": [[1.0, 0.0], [0.0, 1.0]],
    "h": "auto",
    "H": "auto",
    "m": "auto",
    "eta": "auto",
    "decay_base": "1-h*gamma",
    "substeps": 16
  },
  "baseline": {
    "enabled": true,
    "method": "nelder-mead",
    "multistarts": 8,
    "kappa": 8.0,
    "gamma": 0.1,
    "seed": 1,
    "diagnostics": {"tol": 1e-8, "max_iter": 300}
  },
  "output": {"csv": "planar.csv", "svg": "planar.svg", "summary": "planar_summary.json", "checkpoint": "planar.ckpt"}
})");
}

json tracking_doc() {
    return json::parse(R"({
  "system": {"A": [[1.0]], "B": [[1.0]]},
  "disturbance": {
    "kind": "sinusoid",
    "params": {"amplitude": 0.5, "omega": 1.0, "phase": 0.0, "direction": [1.0]},
    "W": 0.5,
    "seed": 0
  },
  "cost": {
    "kind": "tracking",
    "Q": [[1.0]],
    "R": [[1.0]],
    "reference": {"offset": [0.0], "components": [{"amplitude": 0.3, "omega": 1.0, "phase": 0.4, "direction": [1.0]}]}
  },
  "controller": {"T": 50, "K": [[2.0]], "substeps": 64},
  "baseline": {"enabled": true, "kappa": 10.0, "gamma": 0.01, "seed": 1},
  "output": {"csv": "tracking.csv", "summary": "tracking_summary.json"}
})");
}

}  // namespace

json builtin_benchmark(const std::string& name) {
    if (name == "scalar") return scalar_doc();
    if (name == "planar") return planar_doc();
    if (name == "tracking") return tracking_doc();
    throw ContractViolation("unknown benchmark '" + name + "'");
}

std::vector<std::string> builtin_benchmark_names() { return {"scalar", "planar", "tracking"}; }

}  // namespace nsc

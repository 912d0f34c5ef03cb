#pragma once

#include "nsc/bench.hpp"
#include "nsc/controller.hpp"

#include <optional>

namespace nsc {

/// Measured regret and its four-term decomposition
///   regret = h (R1 + R2 + R3) + R0
/// with R1 = S_alg - sum_k f_k (actual windows), R2 = sum_k f_k - min_M F(M),
/// R3 = min_M F(M) - S_star, R0 = (J_alg - h S_alg) - (J_star - h S_star),
/// where S are (weighted) sums of sampled costs.
struct RegretReport {
    double J_alg = 0.0;
    double J_baseline = 0.0;
    double regret = 0.0;
    double R0 = 0.0;
    double R1 = 0.0;
    double R2 = 0.0;
    double R3 = 0.0;
    double S_alg = 0.0;
    double S_star = 0.0;
    double ideal_sum = 0.0;  ///< sum_k f_k over the played windows
    double min_F = 0.0;
    int min_iterations = 0;
    double min_tolerance = 1e-8;
    double min_last_rel_change = 0.0;
    bool min_converged = false;

    /// |h (R1 + R2 + R3) + R0 - regret| / max(|regret|, tiny).
    double identity_residual(double h) const;
};

struct RegretOptions {
    double tol = 1e-8;
    int max_iter = 2000;
    /// Extra starting points for the minimization over the class.
    std::vector<DacParams> starts;
};

/// Ideal states/actions of the played parameter windows; equals x_t - Q^{l+1} x_{t-l-1}.
void played_ideal_trajectory(const SystemDynamics& sys, const RunLog& log, const Matrix& K, double h, int l,
                             std::vector<Vector>& y, std::vector<Vector>& v);

RegretReport regret_diagnostics(const SystemDynamics& sys, const CostFn& cost, const ControllerConfig& cfg,
                                const RunLog& log, const BaselineResult& baseline, const RegretOptions& opts = {});

}  // namespace nsc

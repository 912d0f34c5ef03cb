#pragma once

#include "nsc/cost.hpp"
#include "nsc/dac.hpp"
#include "nsc/linsys.hpp"
#include "nsc/oco.hpp"
#include "nsc/stability.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace nsc {

class EmptyClass : public Error {
public:
    using Error::Error;
};

class ComparatorOutOfClass : public Error {
public:
    ComparatorOutOfClass(int index, double norm, double bound);
    int index() const { return index_; }

private:
    int index_;
};

/// Sampled linear policy u_r = -K x_r held per interval, evaluated on a replay.
struct PolicyEvaluation {
    double J = 0.0;  ///< integral cost
    double S = 0.0;  ///< sum of weight_r c_r(x_r, u_r) (weights 1 except the final partial interval)
    double max_x = 0.0;
    double max_u = 0.0;
};

PolicyEvaluation evaluate_policy(const SampledReplay& replay, const Matrix& K);

/// Same trajectory, returning the per-sample states and actions (x_0..x_{n-1}, u_0..u_{n-1}).
void policy_trajectory(const SampledReplay& replay, const Matrix& K, std::vector<Vector>& x, std::vector<Vector>& u);

/// Integral cost of the sampled policy u = -K x_{rh}.
double eval_linear_policy(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                          const Matrix& K, double T, double h, int substeps);

/// Integral cost of continuous feedback u(t) = -K x(t) (sensitivity variant).
double eval_linear_policy_continuous(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                                     const Matrix& K, double T, double h, int substeps);

struct TraceEntry {
    Matrix K;
    double J = 0.0;
};

struct BaselineResult {
    Matrix K_star;
    double J_star = 0.0;
    double S_star = 0.0;
    StablePolicyCert certificate;
    std::vector<TraceEntry> trace;
    std::uint64_t replay_hash = 0;
    double kappa = 1.0;
    double gamma = 0.0;
};

struct BaselineOptions {
    int multistarts = 8;
    std::uint64_t seed = 0x6a09e667f3bcc909ULL;
    /// Certified candidates injected as starts (e.g. the algorithm's own gain).
    std::vector<Matrix> extra_starts;
    /// Cost weights used to synthesize the LQR start.
    std::optional<std::pair<Matrix, Matrix>> lqr_weights;
    int max_iterations = 0;  ///< 0: 200 * (number of gain entries)
    int jobs = 1;
};

/// Best certified linear gain in hindsight on the replay by multistart Nelder-Mead.
BaselineResult best_in_hindsight(const SystemDynamics& sys, const SampledReplay& replay, const CostFn& cost,
                                 double kappa, double gamma, const BaselineOptions& opts = {});

/// Finds the certificate-preserving minimum of J over the candidate gains (exhaustive, for grid oracles).
std::pair<Matrix, double> best_of(const SystemDynamics& sys, const SampledReplay& replay, double kappa,
                                  double gamma, const std::vector<Matrix>& candidates);

/// M^i = h (K - K*) (I + h(A - BK*))^{i-1}, checked against the class.
DacParams comparator_params(const Matrix& K, const Matrix& K_star, const SystemDynamics& sys, const DacClass& cls);

struct ComparatorGap {
    double gap = 0.0;      ///< sum_t |c_t(y_t, v_t) - c_t(x*_t, u*_t)|
    double max_gap = 0.0;  ///< largest per-sample term
    double D = 0.0;        ///< largest state/action norm on either trajectory
    double W0 = 0.0;       ///< largest ||w_hat|| in the history
};

/// Sampled DAC trajectory under the fixed comparator blocks M* = comparator_params(K, K*),
///   x_{t+1} = (I + h(A - BK)) x_t + h(w_hat_t + B sum_i M*^i w_hat_{t-i}),
/// against the K* recursion x*_{t+1} = (I + h(A - BK*)) x*_t + h w_hat_t, both from zero and
/// driven by the same estimates, for t in [0, n). History pad must be >= l.
ComparatorGap comparator_gap(const SystemDynamics& sys, const CostFn& cost, const Matrix& K, const Matrix& K_star,
                             const DacClass& cls, const DisturbanceHistory& hist, long n);

}  // namespace nsc

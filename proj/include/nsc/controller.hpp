#pragma once

#include "nsc/cost.hpp"
#include "nsc/dac.hpp"
#include "nsc/linsys.hpp"
#include "nsc/oco.hpp"
#include "nsc/stability.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nsc {

class InfeasibleSchedule : public Error {
public:
    using Error::Error;
};

/// Gain used by the run does not carry a certificate valid at the run's h.
class CertificationMismatch : public Error {
public:
    using Error::Error;
};

/// A cost, gradient or state became non-finite during a run.
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

class IncomparableRuns : public Error {
public:
    using Error::Error;
};

struct Schedule {
    double h = 0.0;
    int m = 1;
    int H = 1;
    /// eta = eta0 * sqrt(m / (T h)), eta0 from running D and W0 unless overridden.
    double eta_scale = 0.0;
};

struct ScheduleConstants {
    double c_h = 1.0;
    double c_m = 1.0;
    /// Defaults to 1 / gamma when not set.
    std::optional<double> c_H;
};

/// h = c_h / sqrt(T), m = ceil(c_m / h), H = ceil(c_H ln(max(T, e))).
Schedule default_schedule(double T, double gamma, const ScheduleConstants& c = {});

struct ControllerConfig {
    double T = 0.0;
    double h = 0.0;
    int H = 1;
    int m = 1;
    /// Step size on the unscaled coordinates M~ = M / h; unset means automatic.
    std::optional<double> eta;
    /// Overrides the automatic eta0 constant.
    std::optional<double> eta0;
    Matrix K;
    StablePolicyCert cert;
    /// Class scale a; <= 0 means 2 kappa^3.
    double a = 0.0;
    DecayBase decay_base = DecayBase::OneMinusHGamma;
    int substeps = 64;

    long samples() const { return sample_count(T, h); }
    int l() const { return H * m; }
    long slow_steps() const;
    /// Weight (relative to h) of the final, possibly shortened, interval.
    double last_weight() const;
    DacClass dac_class() const;
};

/// Throws ContractViolation / InfeasibleSchedule / CertificationMismatch.
void validate(const ControllerConfig& cfg, const SystemDynamics& sys);

struct SampleRecord {
    double t = 0.0;
    Vector x;
    Vector u;
    Vector w_hat;
    double cost_sample = 0.0;    ///< c_t(x_r, u_r) at the sample time
    double cost_interval = 0.0;  ///< integral of c over [rh, (r+1)h]
    long slow_k = 0;
    std::uint64_t param_hash = 0;
};

struct SlowRecord {
    long k = 0;
    std::uint64_t param_hash = 0;
    double g_value = 0.0;
    double grad_norm = 0.0;
    double eta = 0.0;
    /// Largest block-norm ratio ||M^i|| / bound(i) after the step.
    double class_ratio = 0.0;
    bool idempotent = true;
    bool fd_fallback = false;
};

struct RunLog {
    std::vector<SampleRecord> samples;
    std::vector<SlowRecord> slow;
    /// Sample -> index into `params`; parameters in force per slow block.
    std::vector<DacParams> params;
    double J = 0.0;
    double W0 = 0.0;
    double max_x = 0.0;
    double max_u = 0.0;
    /// Final state x_n (needed to close the last interval in replays).
    Vector x_final;
    DisturbanceHistory history{1, 0};
    std::uint64_t replay_hash = 0;

    const DacParams& final_params() const { return params.back(); }
};

/// Runs the two-level algorithm from x0 = 0.
RunLog run(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost, const ControllerConfig& cfg);

/// Fingerprint of everything that determines the disturbance replay and cost.
std::uint64_t replay_fingerprint(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                                 double T, double h, int substeps);

}  // namespace nsc

#include "nsc/controller.hpp"

#include <cmath>
#include <numbers>

namespace nsc {

Schedule default_schedule(double T, double gamma, const ScheduleConstants& c) {
    if (!(T > 0.0)) throw ContractViolation("default_schedule: T must be positive");
    if (!(gamma > 0.0)) throw ContractViolation("default_schedule: gamma must be positive");
    Schedule s;
    s.h = c.c_h / std::sqrt(T);
    s.m = static_cast<int>(std::ceil(c.c_m / s.h - 1e-9));
    const double cH = c.c_H.value_or(1.0 / gamma);
    s.H = static_cast<int>(std::ceil(cH * std::log(std::max(T, std::numbers::e)) - 1e-9));
    s.m = std::max(s.m, 1);
    s.H = std::max(s.H, 1);
    const long n = sample_count(T, s.h);
    const long l = static_cast<long>(s.H) * s.m;
    if (l > n)
        throw InfeasibleSchedule("schedule l = H*m = " + std::to_string(l) + " exceeds n = " + std::to_string(n) +
                                 " samples; lower c_H or c_m, or raise c_h / T");
    s.eta_scale = std::sqrt(s.m / (T * s.h));
    return s;
}

long ControllerConfig::slow_steps() const {
    const long n = samples();
    return (n + m - 1) / m;
}

double ControllerConfig::last_weight() const {
    const long n = samples();
    return (T - static_cast<double>(n - 1) * h) / h;
}

DacClass ControllerConfig::dac_class() const { return DacClass::make(cert.kappa, cert.gamma, h, l(), decay_base, a); }

void validate(const ControllerConfig& cfg, const SystemDynamics& sys) {
    if (!(cfg.T > 0.0) || !(cfg.h > 0.0)) throw ContractViolation("controller: T and h must be positive");
    if (cfg.H < 1 || cfg.m < 1) throw ContractViolation("controller: H and m must be >= 1");
    if (cfg.substeps < 2) throw ContractViolation("controller: substeps must be >= 2");
    if (cfg.K.rows() != sys.action_dim() || cfg.K.cols() != sys.state_dim())
        throw ContractViolation("controller: K must be d_u x d_x");
    if (cfg.eta && !(*cfg.eta >= 0.0)) throw ContractViolation("controller: eta must be nonnegative");
    const long n = cfg.samples();
    if (static_cast<long>(cfg.l()) > n)
        throw InfeasibleSchedule("l = H*m = " + std::to_string(cfg.l()) + " exceeds n = " + std::to_string(n));
    if (cfg.cert.K.rows() != cfg.K.rows() || cfg.cert.K.cols() != cfg.K.cols() || cfg.cert.K != cfg.K)
        throw CertificationMismatch("controller: certificate was issued for a different gain");
    if (cfg.h > cfg.cert.h_max * (1.0 + 1e-12))
        throw CertificationMismatch("controller: h = " + std::to_string(cfg.h) +
                                    " exceeds certified h_max = " + std::to_string(cfg.cert.h_max));
}

std::uint64_t replay_fingerprint(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                                 double T, double h, int substeps) {
    Fnv1a f;
    f.update(sys.A());
    f.update(sys.B());
    const std::uint64_t d = dist.fingerprint();
    f.update(&d, sizeof d);
    const int kind = static_cast<int>(cost.kind());
    f.update(&kind, sizeof kind);
    f.update(cost.Q());
    f.update(cost.R());
    const auto& ref = cost.reference();
    f.update(ref.offset);
    for (const auto& c : ref.components) {
        f.update(c.amplitude);
        f.update(c.omega);
        f.update(c.phase);
        f.update(c.direction);
    }
    f.update(T);
    f.update(h);
    f.update(&substeps, sizeof substeps);
    return f.digest();
}

RunLog run(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost, const ControllerConfig& cfg) {
    validate(cfg, sys);
    const int dx = sys.state_dim();
    const int du = sys.action_dim();
    const long n = cfg.samples();
    const long p = cfg.slow_steps();
    const int l = cfg.l();
    const DacClass cls = cfg.dac_class();
    const double last_len = cfg.T - static_cast<double>(n - 1) * cfg.h;

    RunLog log;
    log.history = DisturbanceHistory(dx, 2L * l + 1, n);
    log.samples.reserve(static_cast<std::size_t>(n));
    log.replay_hash = replay_fingerprint(sys, dist, cost, cfg.T, cfg.h, cfg.substeps);
    NoiseBuffer buf(dx, 2 * l + 1);
    IdealObjective objective(sys, cfg.K, cfg.h, cost, l);

    DacParams M = DacParams::zero(cls, du, dx);
    Vector x = Vector::Zero(dx);
    const double G = cost.constants().G > 0.0 ? cost.constants().G : 1.0;
    const double kappa = cfg.cert.kappa;
    const double eta_scale = std::sqrt(cfg.m / (cfg.T * cfg.h));

    for (long k = 0; k < p; ++k) {
        log.params.push_back(M);
        const std::uint64_t ph = M.hash();
        const long r_end = std::min(n, (k + 1) * cfg.m);
        for (long r = k * cfg.m; r < r_end; ++r) {
            const double t = static_cast<double>(r) * cfg.h;
            const double len = (r == n - 1) ? last_len : cfg.h;
            const Vector u = dac_action(cfg.K, x, M, buf);
            const TrajectorySegment seg = integrate_step(sys, dist, t, x, u, len, cfg.substeps);
            SampleRecord rec;
            rec.t = t;
            rec.x = x;
            rec.u = u;
            rec.w_hat = estimate_disturbance(sys, x, u, seg.x1, len);
            rec.cost_sample = cost.value(t, x, u);
            rec.cost_interval = cost_integral(seg, cost);
            rec.slow_k = k;
            rec.param_hash = ph;
            log.J += rec.cost_interval;
            log.max_x = std::max(log.max_x, x.norm());
            log.max_u = std::max(log.max_u, u.norm());
            buf.push(rec.w_hat);
            log.history.push(rec.w_hat);
            x = seg.x1;
            log.samples.push_back(std::move(rec));
        }

        // Slow update with the history available at the end of block k.
        const auto g = objective.evaluate(M, log.history, k * cfg.m, r_end, n, cfg.last_weight(), true);
        double gn2 = 0.0;
        for (const auto& b : g.grad) gn2 += b.squaredNorm();
        if (!std::isfinite(gn2)) throw NonFiniteValue("controller: non-finite gradient at slow step " + std::to_string(k));
        double eta = 0.0;
        if (cfg.eta) {
            eta = *cfg.eta;
        } else {
            const double D = std::max({1.0, log.max_x, log.max_u});
            const double eta0 = cfg.eta0.value_or(1.0 / (G * D * kappa * kappa * sys.kappa_B() *
                                                         std::max(buf.W0(), 1.0)));
            eta = eta0 * eta_scale;
        }
        // Step in the unscaled coordinates M~ = M / h: M~ - eta grad_M~ == M - eta h^2 grad_M.
        M = ogdm_step(M, g.grad, eta * cfg.h * cfg.h);
        SlowRecord sr;
        sr.k = k;
        sr.param_hash = ph;
        sr.g_value = g.value;
        sr.grad_norm = std::sqrt(gn2);
        sr.eta = eta;
        sr.class_ratio = M.class_ratio();
        sr.fd_fallback = g.fd_fallback;
        const DacParams again = project(M.blocks(), cls);
        for (int i = 1; i <= l; ++i)
            if (!(again.block(i).array() == M.block(i).array()).all()) sr.idempotent = false;
        log.slow.push_back(sr);
    }
    log.params.push_back(M);
    log.W0 = buf.W0();
    log.x_final = x;
    return log;
}

}  // namespace nsc

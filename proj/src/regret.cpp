#include "nsc/regret.hpp"

#include <cmath>

namespace nsc {

double RegretReport::identity_residual(double h) const {
    const double recomposed = h * (R1 + R2 + R3) + R0;
    const double scale = std::max({std::abs(regret), std::abs(J_alg) * 1e-12, 1e-300});
    return std::abs(recomposed - regret) / scale;
}

void played_ideal_trajectory(const SystemDynamics& sys, const RunLog& log, const Matrix& K, double h, int l,
                             std::vector<Vector>& y, std::vector<Vector>& v) {
    const long n = static_cast<long>(log.samples.size());
    const Matrix Q = closed_loop_matrix(sys, K, h);
    const Matrix Ql1 = matrix_powers(Q, l + 2).back();
    const int dx = sys.state_dim();
    std::vector<Vector> z(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n));
    for (long s = 0; s < n; ++s) {
        const auto& rec = log.samples[static_cast<std::size_t>(s)];
        z[s] = rec.u + K * rec.x;
        e[s] = rec.w_hat + sys.B() * z[s];
    }
    auto e_at = [&](long s) -> Vector { return s < 0 ? Vector::Zero(dx) : e[static_cast<std::size_t>(s)]; };
    y.assign(static_cast<std::size_t>(n), Vector());
    v.assign(static_cast<std::size_t>(n), Vector());
    Vector acc = Vector::Zero(dx);
    for (long t = 0; t < n; ++t) {
        y[t] = acc;
        v[t] = -K * acc + z[t];
        acc = Q * acc + h * e_at(t) - h * (Ql1 * e_at(t - 1 - l));
    }
}

RegretReport regret_diagnostics(const SystemDynamics& sys, const CostFn& cost, const ControllerConfig& cfg,
                                const RunLog& log, const BaselineResult& baseline, const RegretOptions& opts) {
    if (log.replay_hash != baseline.replay_hash)
        throw IncomparableRuns("baseline and run were computed on different disturbance replays");
    const long n = cfg.samples();
    if (static_cast<long>(log.samples.size()) != n) throw ContractViolation("regret: log length != n");
    const double wl = cfg.last_weight();
    auto weight = [&](long t) { return t == n - 1 ? wl : 1.0; };

    RegretReport rep;
    rep.J_alg = log.J;
    rep.J_baseline = baseline.J_star;
    rep.regret = rep.J_alg - rep.J_baseline;
    rep.S_star = baseline.S_star;
    for (long t = 0; t < n; ++t) rep.S_alg += weight(t) * log.samples[static_cast<std::size_t>(t)].cost_sample;

    std::vector<Vector> y, v;
    played_ideal_trajectory(sys, log, cfg.K, cfg.h, cfg.l(), y, v);
    for (long t = 0; t < n; ++t) rep.ideal_sum += weight(t) * cost.value(static_cast<double>(t) * cfg.h, y[t], v[t]);

    const DacClass cls = cfg.dac_class();
    const IdealObjective obj(sys, cfg.K, cfg.h, cost, cfg.l());
    std::vector<DacParams> starts{DacParams::zero(cls, sys.action_dim(), sys.state_dim()), log.final_params()};
    for (const auto& s : opts.starts) starts.push_back(s);
    const MinimizeResult mr = minimize_ideal(obj, log.history, n, wl, cls, starts, opts.tol, opts.max_iter);
    rep.min_F = mr.value;
    rep.min_iterations = mr.iterations;
    rep.min_tolerance = opts.tol;
    rep.min_last_rel_change = mr.last_rel_change;
    rep.min_converged = mr.converged;

    rep.R1 = rep.S_alg - rep.ideal_sum;
    rep.R2 = rep.ideal_sum - rep.min_F;
    rep.R3 = rep.min_F - rep.S_star;
    rep.R0 = (rep.J_alg - cfg.h * rep.S_alg) - (rep.J_baseline - cfg.h * rep.S_star);
    return rep;
}

}  // namespace nsc

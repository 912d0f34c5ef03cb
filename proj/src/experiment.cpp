#include "nsc/experiment.hpp"

#include "nsc/report.hpp"
#include "nsc/svg.hpp"

#include <cmath>

namespace nsc {

using nlohmann::json;

BaselineResult compute_baseline(const Experiment& ex) {
    const ControllerConfig& cfg = ex.controller;
    const BaselineSettings& bs = ex.baseline;
    const SampledReplay replay(ex.sys, ex.dist, ex.cost, cfg.T, cfg.h, cfg.substeps);
    const double kappa = bs.kappa.value_or(cfg.cert.kappa);
    const double gamma = bs.gamma.value_or(cfg.cert.gamma);

    BaselineResult res;
    if (bs.method == BaselineSettings::Method::Grid) {
        std::vector<Matrix> candidates;
        const long count = static_cast<long>(std::floor((bs.grid_max - bs.grid_min) / bs.grid_step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i)
            candidates.push_back(Matrix::Constant(1, 1, bs.grid_min + static_cast<double>(i) * bs.grid_step));
        const auto [K, J] = best_of(ex.sys, replay, kappa, gamma, candidates);
        res.K_star = K;
        res.J_star = J;
        res.S_star = evaluate_policy(replay, K).S;
        res.certificate = *certify(ex.sys, K, cfg.h, kappa, gamma).cert;
        res.trace.push_back({K, J});
        res.kappa = kappa;
        res.gamma = gamma;
    } else {
        BaselineOptions opts;
        opts.multistarts = bs.multistarts;
        opts.seed = bs.seed;
        opts.extra_starts.push_back(cfg.K);
        opts.lqr_weights = std::make_pair(ex.cost.Q(), ex.cost.R());
        res = best_in_hindsight(ex.sys, replay, ex.cost, kappa, gamma, opts);
    }
    res.replay_hash = replay_fingerprint(ex.sys, ex.dist, ex.cost, cfg.T, cfg.h, cfg.substeps);
    return res;
}

ExperimentOutcome run_experiment(const Experiment& ex, bool with_baseline) {
    ExperimentOutcome out;
    out.log = run(ex.sys, ex.dist, ex.cost, ex.controller);
    if (!with_baseline || !ex.baseline.enabled) return out;
    out.baseline = compute_baseline(ex);
    RegretOptions ro;
    ro.tol = ex.baseline.regret_tol;
    ro.max_iter = ex.baseline.regret_max_iter;
    out.regret = regret_diagnostics(ex.sys, ex.cost, ex.controller, out.log, *out.baseline, ro);
    if (ex.baseline.continuous_feedback)
        out.J_star_continuous = eval_linear_policy_continuous(ex.sys, ex.dist, ex.cost, out.baseline->K_star,
                                                              ex.controller.T, ex.controller.h, ex.controller.substeps);
    return out;
}

namespace {

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

json summary_json(const Experiment& ex, const ExperimentOutcome& out) {
    const ControllerConfig& cfg = ex.controller;
    json s;
    s["schedule"] = {{"T", cfg.T},
                     {"h", cfg.h},
                     {"H", cfg.H},
                     {"m", cfg.m},
                     {"l", cfg.l()},
                     {"samples", cfg.samples()},
                     {"slow_steps", cfg.slow_steps()},
                     {"eta", cfg.eta ? json(*cfg.eta) : json("auto")},
                     {"substeps", cfg.substeps}};
    s["certificate"] = {{"K", matrix_json(cfg.K)},
                        {"kappa", cfg.cert.kappa},
                        {"gamma", cfg.cert.gamma},
                        {"h_max", cfg.cert.h_max},
                        {"schur_fallback", cfg.cert.schur_fallback}};
    const RunLog& log = out.log;
    double max_ratio = 0.0;
    bool idempotent = true;
    for (const auto& r : log.slow) {
        max_ratio = std::max(max_ratio, r.class_ratio);
        idempotent = idempotent && r.idempotent;
    }
    s["run"] = {{"J_alg", log.J},
                {"W0", log.W0},
                {"max_x", log.max_x},
                {"max_u", log.max_u},
                {"max_class_ratio", max_ratio},
                {"projection_idempotent", idempotent},
                {"replay_hash", hex64(log.replay_hash)},
                {"final_param_hash", hex64(log.final_params().hash())}};
    if (out.baseline) {
        const BaselineResult& b = *out.baseline;
        s["baseline"] = {{"K_star", matrix_json(b.K_star)},
                         {"J_star", b.J_star},
                         {"S_star", b.S_star},
                         {"kappa", b.kappa},
                         {"gamma", b.gamma},
                         {"trace_length", b.trace.size()}};
        if (out.J_star_continuous) s["baseline"]["J_star_continuous_feedback"] = *out.J_star_continuous;
    }
    if (out.regret) {
        const RegretReport& r = *out.regret;
        s["regret"] = {{"J_alg", r.J_alg},
                       {"J_star", r.J_baseline},
                       {"regret", r.regret},
                       {"R0", r.R0},
                       {"R1", r.R1},
                       {"R2", r.R2},
                       {"R3", r.R3},
                       {"S_alg", r.S_alg},
                       {"S_star", r.S_star},
                       {"ideal_sum", r.ideal_sum},
                       {"min_F", r.min_F},
                       {"min_iterations", r.min_iterations},
                       {"min_converged", r.min_converged},
                       {"min_last_rel_change", r.min_last_rel_change},
                       {"identity_residual", r.identity_residual(cfg.h)}};
    }
    return s;
}

std::string run_svg(const Experiment& ex, const ExperimentOutcome& out) {
    const ControllerConfig& cfg = ex.controller;
    const RunLog& log = out.log;
    const long n = static_cast<long>(log.samples.size());
    std::vector<double> t(static_cast<std::size_t>(n)), cum(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (long r = 0; r < n; ++r) {
        acc += log.samples[r].cost_interval;
        t[r] = log.samples[r].t + (r == n - 1 ? cfg.T - log.samples[r].t : cfg.h);
        cum[r] = acc;
    }
    PlotPanel costs{"Cumulative cost", "t", "J(t)", false, false, {{"algorithm", t, cum}}, {}};
    std::vector<PlotPanel> panels;

    if (out.baseline && out.regret) {
        const SampledReplay replay(ex.sys, ex.dist, ex.cost, cfg.T, cfg.h, cfg.substeps);
        std::vector<Vector> xs, us;
        policy_trajectory(replay, out.baseline->K_star, xs, us);
        std::vector<Vector> y, v;
        played_ideal_trajectory(ex.sys, log, cfg.K, cfg.h, cfg.l(), y, v);
        std::vector<double> base(n), regret(n), r0(n), r1(n);
        double cb = 0.0, c0 = 0.0, c1 = 0.0;
        const double wl = cfg.last_weight();
        for (long r = 0; r < n; ++r) {
            const double w = r == n - 1 ? wl : 1.0;
            const double tt = static_cast<double>(r) * cfg.h;
            const double bi = replay.interval_cost(r, xs[r], us[r]);
            const double bs = replay.sample_cost(r, xs[r], us[r]);
            cb += bi;
            c0 += (log.samples[r].cost_interval - cfg.h * w * log.samples[r].cost_sample) - (bi - cfg.h * w * bs);
            c1 += cfg.h * w * (log.samples[r].cost_sample - ex.cost.value(tt, y[r], v[r]));
            base[r] = cb;
            regret[r] = cum[r] - cb;
            r0[r] = c0;
            r1[r] = c1;
        }
        costs.series.push_back({"best linear K*", t, base});
        panels.push_back(costs);
        panels.push_back({"Running regret", "t", "J_alg(t) - J*(t)", false, false, {{"regret", t, regret}}, {}});
        const RegretReport& rep = *out.regret;
        panels.push_back({"Decomposition terms",
                          "t",
                          "running value",
                          false,
                          false,
                          {{"R0 (discretization)", t, r0}, {"h R1 (ideal vs played)", t, r1}},
                          {"h R2 = " + format_double(cfg.h * rep.R2), "h R3 = " + format_double(cfg.h * rep.R3),
                           "regret = " + format_double(rep.regret)}});
    } else {
        panels.push_back(costs);
    }
    return render_svg(panels);
}

}  // namespace nsc

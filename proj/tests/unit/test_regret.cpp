#include "nsc/regret.hpp"

#include <doctest.h>

#include <cmath>

using namespace nsc;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

struct Fixture {
    SystemDynamics sys = SystemDynamics::with_tight_bounds(scalar(1.0), scalar(1.0));
    CostFn cost = CostFn::quadratic(scalar(1.0), scalar(1.0));
    DisturbanceSignal dist = DisturbanceSignal::sinusoid(1, {0.5, 1.0, 0.0, Vector::Ones(1)}, 0.5);
    ControllerConfig cfg;
    RunLog log;

    Fixture() {
        cfg.T = 8.05;
        cfg.h = 0.1;
        cfg.H = 2;
        cfg.m = 4;
        cfg.K = scalar(2.0);
        const auto [kappa, gamma] = best_certificate(sys, cfg.K, cfg.h);
        cfg.cert = *certify(sys, cfg.K, cfg.h, kappa, gamma).cert;
        cfg.substeps = 16;
        log = run(sys, dist, cost, cfg);
    }
};

}  // namespace

TEST_CASE("played ideal states equal x_t - Q^{l+1} x_{t-l-1}") {
    const Fixture f;
    std::vector<Vector> y, v;
    const int l = f.cfg.l();
    played_ideal_trajectory(f.sys, f.log, f.cfg.K, f.cfg.h, l, y, v);
    const double Ql1 = std::pow(1.0 + f.cfg.h * (1.0 - 2.0), l + 1);
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double back = t >= static_cast<std::size_t>(l + 1) ? f.log.samples[t - l - 1].x(0) : 0.0;
        CHECK(y[t](0) == doctest::Approx(f.log.samples[t].x(0) - Ql1 * back).epsilon(1e-10).scale(1e-12));
        CHECK(v[t](0) == doctest::Approx(-2.0 * y[t](0) + f.log.samples[t].u(0) + 2.0 * f.log.samples[t].x(0)));
    }
}

TEST_CASE("played ideal states agree with the windowed closed form") {
    const Fixture f;
    std::vector<Vector> y, v;
    played_ideal_trajectory(f.sys, f.log, f.cfg.K, f.cfg.h, f.cfg.l(), y, v);
    const long n = static_cast<long>(f.log.samples.size());
    for (long k = 0; k * f.cfg.m < n; ++k) {
        IdealWindow win;
        win.sys = &f.sys;
        win.K = f.cfg.K;
        win.h = f.cfg.h;
        win.m = f.cfg.m;
        win.H = f.cfg.H;
        win.k = k;
        win.history = &f.log.history;
        for (long j = k - f.cfg.H - 1; j <= k; ++j) win.slow.push_back(f.log.params[std::max<long>(j, 0)]);
        for (long t = k * f.cfg.m; t < std::min(n, (k + 1) * f.cfg.m); ++t) {
            const IdealStateAction sa = ideal_state_action(win, t);
            CHECK((sa.y - y[t]).norm() <= 1e-11);
            CHECK((sa.v - v[t]).norm() <= 1e-11);
        }
    }
}

TEST_CASE("regret report recomposes exactly and refuses mismatched replays") {
    const Fixture f;
    const SampledReplay rp(f.sys, f.dist, f.cost, f.cfg.T, f.cfg.h, f.cfg.substeps);
    BaselineResult b = best_in_hindsight(f.sys, rp, f.cost, 10.0, 0.01);
    b.replay_hash = replay_fingerprint(f.sys, f.dist, f.cost, f.cfg.T, f.cfg.h, f.cfg.substeps);
    const RegretReport r = regret_diagnostics(f.sys, f.cost, f.cfg, f.log, b);
    CHECK(r.regret == f.log.J - b.J_star);
    CHECK(r.identity_residual(f.cfg.h) <= 1e-12);
    double S = 0.0;
    for (std::size_t t = 0; t < f.log.samples.size(); ++t)
        S += (t + 1 == f.log.samples.size() ? f.cfg.last_weight() : 1.0) * f.log.samples[t].cost_sample;
    CHECK(r.S_alg == doctest::Approx(S).epsilon(1e-14));
    const IdealObjective obj(f.sys, f.cfg.K, f.cfg.h, f.cost, f.cfg.l());
    const long n = static_cast<long>(f.log.samples.size());
    const auto zero = DacParams::zero(f.cfg.dac_class(), 1, 1);
    CHECK(r.min_F <= obj.evaluate(zero, f.log.history, 0, n, n, f.cfg.last_weight(), false).value);
    CHECK(r.min_F <= obj.evaluate(f.log.final_params(), f.log.history, 0, n, n, f.cfg.last_weight(), false).value);
    b.replay_hash ^= 1;
    CHECK_THROWS_AS(regret_diagnostics(f.sys, f.cost, f.cfg, f.log, b), IncomparableRuns);
}

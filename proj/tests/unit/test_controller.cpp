#include "nsc/bench.hpp"
#include "nsc/controller.hpp"

#include <doctest.h>

#include <cmath>

using namespace nsc;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

struct Scalar {
    SystemDynamics sys = SystemDynamics::with_tight_bounds(scalar(1.0), scalar(1.0));
    CostFn cost = CostFn::quadratic(scalar(1.0), scalar(1.0));
    DisturbanceSignal dist = DisturbanceSignal::sinusoid(1, {0.5, 1.0, 0.0, Vector::Ones(1)}, 0.5);

    ControllerConfig config(double T, double h, int H, int m) const {
        ControllerConfig c;
        c.T = T;
        c.h = h;
        c.H = H;
        c.m = m;
        c.K = scalar(2.0);
        const auto [kappa, gamma] = best_certificate(sys, c.K, h);
        c.cert = *certify(sys, c.K, h, kappa, gamma).cert;
        c.substeps = 16;
        return c;
    }
};

}  // namespace

TEST_CASE("default schedule") {
    const Schedule s = default_schedule(100.0, 0.5);
    CHECK(s.h == doctest::Approx(0.1));
    CHECK(s.m == 10);
    CHECK(s.H == static_cast<int>(std::ceil(2.0 * std::log(100.0))));
    CHECK(s.eta_scale == doctest::Approx(std::sqrt(10.0 / 10.0)));
    const Schedule small = default_schedule(2.0, 1.0);  // ln(max(T, e)) = 1
    CHECK(small.H == 1);
    CHECK_THROWS_AS(default_schedule(4.0, 0.01), InfeasibleSchedule);
    CHECK_THROWS_AS(default_schedule(-1.0, 0.5), ContractViolation);
}

TEST_CASE("config helpers") {
    const Scalar s;
    ControllerConfig c = s.config(1.05, 0.1, 1, 3);
    CHECK(c.samples() == 11);
    CHECK(c.slow_steps() == 4);
    CHECK(c.last_weight() == doctest::Approx(0.5));
    CHECK(c.l() == 3);
}

TEST_CASE("validation rejects inconsistent configurations") {
    const Scalar s;
    ControllerConfig c = s.config(1.0, 0.1, 4, 4);
    CHECK_THROWS_AS(validate(c, s.sys), InfeasibleSchedule);
    c = s.config(10.0, 0.1, 2, 2);
    c.K = scalar(3.0);
    CHECK_THROWS_AS(validate(c, s.sys), CertificationMismatch);
    c = s.config(10.0, 0.1, 2, 2);
    c.h = 0.2;
    CHECK_THROWS_AS(validate(c, s.sys), CertificationMismatch);
    c = s.config(10.0, 0.1, 2, 2);
    c.substeps = 1;
    CHECK_THROWS_AS(validate(c, s.sys), ContractViolation);
}

TEST_CASE("zero disturbance keeps the state at the origin") {
    const Scalar s;
    const RunLog log = run(s.sys, DisturbanceSignal::zero(1), s.cost, s.config(5.0, 0.1, 2, 5));
    CHECK(log.samples.size() == 50);
    for (const auto& r : log.samples) {
        CHECK(r.x.isZero());
        CHECK(r.u.isZero());
    }
    CHECK(log.J == 0.0);
}

TEST_CASE("with eta = 0 the run is the fixed linear policy") {
    const Scalar s;
    ControllerConfig c = s.config(6.0, 0.1, 2, 5);
    c.eta = 0.0;
    const RunLog log = run(s.sys, s.dist, s.cost, c);
    CHECK(log.J == doctest::Approx(eval_linear_policy(s.sys, s.dist, s.cost, c.K, 6.0, 0.1, 16)).epsilon(1e-12));
}

TEST_CASE("first block plays -K x and every step stays in class and projects idempotently") {
    const Scalar s;
    const ControllerConfig c = s.config(20.0, 0.1, 2, 5);
    const RunLog log = run(s.sys, s.dist, s.cost, c);
    for (long r = 0; r < c.m; ++r) CHECK(log.samples[r].u(0) == -2.0 * log.samples[r].x(0));
    REQUIRE(log.slow.size() == static_cast<std::size_t>(c.slow_steps()));
    for (const auto& sr : log.slow) {
        CHECK(sr.class_ratio <= 1.0);
        CHECK(sr.idempotent);
        CHECK_FALSE(sr.fd_fallback);
    }
    CHECK(log.params.size() == log.slow.size() + 1);
    CHECK(log.samples.back().slow_k == static_cast<long>(log.slow.size()) - 1);
}

TEST_CASE("disturbance estimates track the signal to first order") {
    const Scalar s;
    double err[2];
    int i = 0;
    for (double h : {0.05, 0.025}) {
        ControllerConfig c = s.config(5.0, h, 1, 4);
        const RunLog log = run(s.sys, s.dist, s.cost, c);
        double e = 0.0;
        for (const auto& r : log.samples) e = std::max(e, (r.w_hat - s.dist.value(r.t)).norm());
        err[i++] = e;
    }
    CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("runs are deterministic") {
    const Scalar s;
    const ControllerConfig c = s.config(10.0, 0.1, 2, 5);
    const RunLog a = run(s.sys, s.dist, s.cost, c);
    const RunLog b = run(s.sys, s.dist, s.cost, c);
    CHECK(a.J == b.J);
    CHECK(a.final_params().hash() == b.final_params().hash());
    CHECK(a.replay_hash == b.replay_hash);
}

#include "nsc/linsys.hpp"

#include "gen.hpp"

#include <doctest.h>

#include <cmath>

using namespace nsc;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
Vector vec1(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_CASE("system dynamics rejects bad shapes and exceeded bounds") {
    CHECK_THROWS_AS(SystemDynamics(Matrix::Zero(2, 3), Matrix::Zero(2, 1), 1, 1), ContractViolation);
    CHECK_THROWS_AS(SystemDynamics(Matrix::Zero(2, 2), Matrix::Zero(3, 1), 1, 1), ContractViolation);
    CHECK_THROWS_AS(SystemDynamics(scalar(2.0), scalar(1.0), 1.5, 1.0), ContractViolation);
    const SystemDynamics s = SystemDynamics::with_tight_bounds(scalar(-2.0), scalar(3.0));
    CHECK(s.kappa_A() == doctest::Approx(2.0));
    CHECK(s.kappa_B() == doctest::Approx(3.0));
}

TEST_CASE("sample count rounds up and tolerates representation error") {
    CHECK(sample_count(10.0, 0.1) == 100);
    CHECK(sample_count(1.0, 0.3) == 4);
    CHECK(sample_count(50.0, 50.0 / 354.0) == 354);
    CHECK_THROWS_AS(sample_count(1.0, 0.0), ContractViolation);
}

TEST_CASE("RK4 step on x' = a x matches the stability polynomial") {
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(scalar(-1.3), scalar(1.0));
    const auto w = DisturbanceSignal::zero(1);
    const auto seg = integrate_step(sys, w, 0.0, vec1(2.0), vec1(0.0), 0.1, 8);
    const double z = -1.3 * 0.1 / 8.0;
    const double R = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
    CHECK(seg.x1(0) == doctest::Approx(2.0 * std::pow(R, 8)).epsilon(1e-14));
    CHECK(seg.x1(0) == doctest::Approx(2.0 * std::exp(-0.13)).epsilon(1e-9));
    CHECK(seg.times.size() == 9);
    CHECK(seg.times.back() == 0.1);
}

TEST_CASE("constant input and disturbance on a pure integrator is exact") {
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(scalar(0.0), scalar(2.0));
    const auto w = DisturbanceSignal::constant(vec1(0.25), 1.0);
    const auto seg = integrate_step(sys, w, 3.0, vec1(1.0), vec1(0.5), 0.2, 4);
    CHECK(seg.x1(0) == doctest::Approx(1.0 + 0.2 * (2.0 * 0.5 + 0.25)).epsilon(1e-15));
}

TEST_CASE("sinusoidal forcing integrates to the closed form") {
    // x' = w(t) = 0.5 sin t from x(0) = 0 gives 0.5 (1 - cos t).
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(scalar(0.0), scalar(1.0));
    const auto w = DisturbanceSignal::sinusoid(1, {0.5, 1.0, 0.0, Vector::Ones(1)}, 0.5);
    const auto seg = integrate_step(sys, w, 0.0, vec1(0.0), vec1(0.0), 0.7, 16);
    CHECK(seg.x1(0) == doctest::Approx(0.5 * (1.0 - std::cos(0.7))).epsilon(1e-8));
}

TEST_CASE("non-finite states raise IntegrationDivergence") {
    const SystemDynamics sys(scalar(1e150), scalar(1.0), 1e150, 1.0);
    const auto w = DisturbanceSignal::zero(1);
    CHECK_THROWS_AS(integrate_step(sys, w, 0.0, vec1(1e200), vec1(0.0), 1.0, 2), IntegrationDivergence);
}

TEST_CASE("Simpson weights integrate cubics exactly") {
    for (int panels : {2, 3, 4, 5, 8, 9}) {
        const double width = 0.3;
        const auto wts = simpson_weights(panels, width);
        REQUIRE(wts.size() == static_cast<std::size_t>(panels + 1));
        double s = 0.0;
        for (int j = 0; j <= panels; ++j) {
            const double t = j * width;
            s += wts[j] * t * t * t;
        }
        const double L = panels * width;
        CHECK(s == doctest::Approx(L * L * L * L / 4.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(simpson_weights(1, 0.1), QuadratureResolutionError);
}

TEST_CASE("interval cost of a decaying state matches the analytic integral") {
    // x(t) = x0 e^{a t}, cost x^2: integral (e^{2ah} - 1) x0^2 / (2a).
    const double a = -0.8, h = 0.5;
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(scalar(a), scalar(1.0));
    const auto w = DisturbanceSignal::zero(1);
    const CostFn c = CostFn::quadratic(scalar(1.0), scalar(0.0));
    const auto seg = integrate_step(sys, w, 0.0, vec1(1.5), vec1(0.0), h, 64);
    CHECK(cost_integral(seg, c) == doctest::Approx(2.25 * (std::exp(2 * a * h) - 1.0) / (2 * a)).epsilon(1e-10));
}

TEST_CASE("disturbance bounds hold for every kind (property)") {
    testgen::Gen g(5);
    for (int k = 0; k < 40; ++k) {
        const int dim = g.integer(1, 3);
        const double W = g.uniform(0.1, 2.0);
        std::vector<DisturbanceSignal::Tone> tones;
        for (int j = 0, n = g.integer(1, 4); j < n; ++j) tones.push_back({g.uniform(0.0, 3.0), g.uniform(0.0, 4.0), {}, {}});
        const DisturbanceSignal sigs[] = {DisturbanceSignal::sum_of_sinusoids(dim, tones, W, 17 + k),
                                          DisturbanceSignal::constant(g.vector(dim) * 3.0, W),
                                          DisturbanceSignal::smooth_ramp(g.vector(dim) * 3.0, g.uniform(0.1, 3.0), W)};
        for (const auto& s : sigs)
            for (double t = 0.0; t < 30.0; t += 0.173) {
                const auto e = s.eval(t);
                CHECK(e.w.norm() <= W * (1 + 1e-12));
                CHECK(e.wdot.norm() <= W * (1 + 1e-12));
            }
    }
}

TEST_CASE("seeded disturbances replay identically") {
    const std::vector<DisturbanceSignal::Tone> tones{{0.5, 0.2, {}, {}}, {0.5, 0.25, {}, {}}};
    const auto a = DisturbanceSignal::sum_of_sinusoids(2, tones, 0.5, 7);
    const auto b = DisturbanceSignal::sum_of_sinusoids(2, tones, 0.5, 7);
    const auto c = DisturbanceSignal::sum_of_sinusoids(2, tones, 0.5, 8);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint() != c.fingerprint());
    CHECK((a.value(3.7) - b.value(3.7)).norm() == 0.0);
    CHECK((a.value(3.7) - c.value(3.7)).norm() > 0.0);
    // Derivative by central differences.
    const double t = 2.1, e = 1e-5;
    CHECK((a.eval(t).wdot - (a.value(t + e) - a.value(t - e)) / (2 * e)).norm() < 1e-9);
}

TEST_CASE("sampled replay reproduces direct integration") {
    testgen::Gen g(21);
    Matrix A(2, 2), B(2, 1);
    A << 0, 1, -1.2, -0.2;
    B << 0, 1;
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(A, B);
    const auto w = DisturbanceSignal::sum_of_sinusoids(2, {{0.5, 0.7, {}, {}}, {0.3, 1.3, {}, {}}}, 0.5, 3);
    ReferenceSignal ref{Vector::Zero(2), {{0.2, 0.9, 0.1, Vector::Ones(2)}}};
    const CostFn cost = CostFn::tracking(Matrix::Identity(2, 2), Matrix::Identity(1, 1) * 0.5, ref);
    const double T = 3.05, h = 0.1;
    const SampledReplay rp(sys, w, cost, T, h, 16);
    REQUIRE(rp.intervals() == 31);
    CHECK(rp.interval_length(30) == doctest::Approx(0.05));
    for (long r : {0L, 7L, 30L}) {
        const Vector x = g.vector(2), u = g.vector(1);
        const double t0 = rp.interval_start(r);
        const auto seg = integrate_step(sys, w, t0, x, u, rp.interval_length(r), 16);
        CHECK((rp.step(r, x, u) - seg.x1).norm() < 1e-12);
        CHECK(rp.interval_cost(r, x, u) == doctest::Approx(cost_integral(seg, cost)).epsilon(1e-11));
        CHECK(rp.sample_cost(r, x, u) == doctest::Approx(cost.value(t0, x, u)).epsilon(1e-13));
    }
}

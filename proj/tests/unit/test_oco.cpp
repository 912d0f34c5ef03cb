#include "nsc/oco.hpp"

#include "gen.hpp"

#include <doctest.h>

#include <cmath>

using namespace nsc;

namespace {

struct Setup {
    SystemDynamics sys;
    Matrix K;
    double h;
    CostFn cost;
    DacClass cls;
    DisturbanceHistory hist;
};

Setup make_setup(testgen::Gen& g, int l, long count) {
    const int dx = g.integer(1, 3), du = g.integer(1, 2);
    SystemDynamics sys = SystemDynamics::with_tight_bounds(0.5 * g.matrix(dx, dx), g.matrix(dx, du));
    Matrix K = sys.B().transpose() + 0.0 * g.matrix(du, dx);
    const Matrix a = g.matrix(dx, dx), b = g.matrix(du, du);
    CostFn cost = CostFn::quadratic(a * a.transpose() + 0.1 * Matrix::Identity(dx, dx),
                                    b * b.transpose() + 0.1 * Matrix::Identity(du, du));
    DisturbanceHistory hist(dx, 2L * l + 1, count);
    for (long s = 0; s < count; ++s) hist.push(g.vector(dx));
    return {std::move(sys), std::move(K), 0.05, std::move(cost), DacClass::make(2.0, 0.5, 0.05, l), std::move(hist)};
}

DacParams random_params(testgen::Gen& g, const DacClass& cls, int du, int dx) {
    std::vector<Matrix> blocks;
    for (int i = 1; i <= cls.l; ++i) blocks.push_back(g.matrix(du, dx) * (0.3 * cls.bound(i)));
    return DacParams(std::move(blocks), cls);
}

/// x_t from x_{t0} = 0 under u_s = -K x_s + sum_i M^i w_{s-i}, x_{s+1} = Q x_s + h (w_s + B z_s).
std::vector<Vector> literal_states(const Setup& s, const DacParams& M, long t0, long t1) {
    const Matrix Q = closed_loop_matrix(s.sys, s.K, s.h);
    std::vector<Vector> xs;
    Vector x = Vector::Zero(s.sys.state_dim());
    for (long t = t0; t <= t1; ++t) {
        xs.push_back(x);
        Vector z = Vector::Zero(s.sys.action_dim());
        for (int i = 1; i <= M.l(); ++i) z += M.block(i) * s.hist.at(t - i);
        x = Q * x + s.h * (s.hist.at(t) + s.sys.B() * z);
    }
    return xs;
}

}  // namespace

TEST_CASE("transition coefficients of a scalar l = 1 controller") {
    // Psi_0 = 1, Psi_1 = Q + B M, Psi_2 = Q B M.
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0));
    const Matrix K = Matrix::Constant(1, 1, 2.0);
    const DacClass cls = DacClass::make(2.0, 0.5, 0.1, 1);
    const DacParams M({Matrix::Constant(1, 1, 0.3)}, cls);
    const auto psi = psi_table(K, sys, 0.1, {M}, 2).psi;
    REQUIRE(psi.size() == 3);
    CHECK(psi[0](0, 0) == doctest::Approx(1.0));
    CHECK(psi[1](0, 0) == doctest::Approx(0.9 + 0.3));
    CHECK(psi[2](0, 0) == doctest::Approx(0.9 * 0.3));
    CHECK(psi_bound(16.0, 1, 0.1, 1.0, 2.0, 0.95, 3) == doctest::Approx(16.0 * 1.1 * 4.0 * 0.95 * 0.95));
}

TEST_CASE("disturbance history views") {
    DisturbanceHistory hist(2, 3, 10);
    for (int s = 0; s < 5; ++s) hist.push((Vector(2) << s, 10 * s).finished());
    CHECK(hist.at(-3).isZero());
    CHECK(hist.at(4)(1) == 40.0);
    const auto seg = hist.segment(-1, 3);
    CHECK(seg.size() == 6);
    CHECK(seg(0) == 0.0);
    CHECK(seg(4) == 1.0);
    const auto cols = hist.columns(1, 3);
    CHECK(cols(1, 2) == 30.0);
    const auto win = hist.windows(0, 2, 3);
    CHECK(win.rows() == 4);
    CHECK(win.cols() == 3);
    for (int c = 0; c < 3; ++c) CHECK((win.col(c) - hist.segment(c, 2)).norm() == 0.0);
}

TEST_CASE("ideal trajectory equals the literal recursion from a zero state (property)") {
    testgen::Gen g(51);
    for (int k = 0; k < 30; ++k) {
        const int l = g.integer(1, 5);
        Setup s = make_setup(g, l, 30);
        const DacParams M = random_params(g, s.cls, s.sys.action_dim(), s.sys.state_dim());
        const IdealObjective obj(s.sys, s.K, s.h, s.cost, l);
        const long t_begin = g.integer(0, 10), t_end = t_begin + g.integer(1, 15);
        std::vector<Vector> y, v;
        obj.trajectory(M, s.hist, t_begin, t_end, y, v);
        REQUIRE(static_cast<long>(y.size()) == t_end - t_begin);
        double value = 0.0;
        for (long t = t_begin; t < t_end; ++t) {
            const auto xs = literal_states(s, M, t - 1 - l, t);
            const Vector& yt = xs.back();
            Vector vt = -s.K * yt;
            for (int j = 1; j <= l; ++j) vt += M.block(j) * s.hist.at(t - j);
            CHECK((y[t - t_begin] - yt).norm() <= 1e-12 * std::max(1.0, yt.norm()));
            CHECK((v[t - t_begin] - vt).norm() <= 1e-12 * std::max(1.0, vt.norm()));
            value += s.cost.value(t * s.h, yt, vt);
        }
        const auto res = obj.evaluate(M, s.hist, t_begin, t_end, t_end, 1.0, false);
        CHECK(res.value == doctest::Approx(value).epsilon(1e-11));
    }
}

TEST_CASE("closed form y = h sum Psi w matches ideal_state_action across slow boundaries") {
    testgen::Gen g(52);
    const int H = 2, m = 3, l = H * m;
    Setup s = make_setup(g, l, 40);
    IdealWindow win;
    win.sys = &s.sys;
    win.K = s.K;
    win.h = s.h;
    win.m = m;
    win.H = H;
    win.k = 6;
    win.history = &s.hist;
    for (int j = 0; j < H + 2; ++j) win.slow.push_back(random_params(g, s.cls, s.sys.action_dim(), s.sys.state_dim()));
    for (long t = win.k * m; t < (win.k + 1) * m; ++t) {
        std::vector<DacParams> by_lag;
        for (int j = 0; j <= l; ++j) by_lag.push_back(win.params_at(t - 1 - j));
        const auto psi = psi_table(s.K, s.sys, s.h, by_lag, 2 * l).psi;
        Vector y = Vector::Zero(s.sys.state_dim());
        for (int i = 0; i <= 2 * l; ++i) y += s.h * psi[i] * s.hist.at(t - 1 - i);
        const IdealStateAction sa = ideal_state_action(win, t);
        CHECK((sa.y - y).norm() <= 1e-12 * std::max(1.0, y.norm()));
    }
}

TEST_CASE("objective gradient matches central differences (property)") {
    testgen::Gen g(53);
    for (int k = 0; k < 10; ++k) {
        const int l = g.integer(1, 4);
        Setup s = make_setup(g, l, 25);
        const int du = s.sys.action_dim(), dx = s.sys.state_dim();
        const DacParams M = random_params(g, s.cls, du, dx);
        const IdealObjective obj(s.sys, s.K, s.h, s.cost, l);
        const long n = 20;
        const auto res = obj.evaluate(M, s.hist, 3, n, n, 0.4, true);
        REQUIRE(res.grad.size() == static_cast<std::size_t>(l));
        double gmax = 0.0;
        for (const auto& b : res.grad) gmax = std::max(gmax, b.cwiseAbs().maxCoeff());
        for (int i = 1; i <= l; ++i)
            for (int r = 0; r < du; ++r)
                for (int c = 0; c < dx; ++c) {
                    const double e = 1e-5;
                    auto p = M.blocks(), q = M.blocks();
                    p[i - 1](r, c) += e;
                    q[i - 1](r, c) -= e;
                    const double fd = (obj.evaluate(DacParams(p, s.cls), s.hist, 3, n, n, 0.4, false).value -
                                       obj.evaluate(DacParams(q, s.cls), s.hist, 3, n, n, 0.4, false).value) /
                                      (2 * e);
                    CHECK(std::abs(fd - res.grad[i - 1](r, c)) <= 1e-6 * std::max(gmax, 1e-8));
                }
    }
}

TEST_CASE("OGD step is the projected gradient step") {
    const DacClass cls = DacClass::make(1.0, 0.5, 0.1, 2);  // bounds 0.2, 0.19
    const DacParams M({Matrix::Constant(1, 1, 0.1), Matrix::Constant(1, 1, 0.0)}, cls);
    const DacParams N = ogdm_step(M, {Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 0.5)}, 0.05);
    CHECK(N.block(1)(0, 0) == doctest::Approx(0.15));
    CHECK(N.block(2)(0, 0) == doctest::Approx(-0.025));
    const DacParams P = ogdm_step(M, {Matrix::Constant(1, 1, -10.0), Matrix::Constant(1, 1, 0.0)}, 0.05);
    CHECK(P.block(1)(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(P.block(1)(0, 0) < 0.2);
}

TEST_CASE("class minimization agrees with a dense scan in one dimension") {
    testgen::Gen g(54);
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(Matrix::Constant(1, 1, 0.2), Matrix::Constant(1, 1, 1.0));
    const Matrix K = Matrix::Constant(1, 1, 1.5);
    const CostFn cost = CostFn::quadratic(Matrix::Identity(1, 1), Matrix::Identity(1, 1) * 0.3);
    const DacClass cls = DacClass::make(1.5, 0.5, 0.1, 1);
    DisturbanceHistory hist(1, 3, 60);
    for (int s = 0; s < 60; ++s) hist.push(Vector::Constant(1, std::sin(0.3 * s) + 0.2 * g.normal()));
    const IdealObjective obj(sys, K, 0.1, cost, 1);
    const auto res = minimize_ideal(obj, hist, 60, 1.0, cls, {DacParams::zero(cls, 1, 1)}, 1e-12, 5000);
    double best = 1e300;
    const double b = cls.bound(1);
    for (int i = 0; i <= 20000; ++i) {
        const double m = -b + 2 * b * i / 20000.0;
        best = std::min(best, obj.evaluate(DacParams({Matrix::Constant(1, 1, m)}, cls), hist, 0, 60, 60, 1.0, false).value);
    }
    CHECK(res.M.in_class());
    CHECK(res.value <= best + 1e-9 * std::abs(best));
    CHECK(res.value >= best - 1e-6 * std::abs(best));
}

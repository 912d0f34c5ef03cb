#include "nsc/dac.hpp"

#include "gen.hpp"

#include <doctest.h>

#include <cmath>

using namespace nsc;

namespace {

Matrix in_ball(testgen::Gen& g, int r, int c, double bound) {
    Matrix z = g.matrix(r, c);
    return z * (g.uniform() * bound / spectral_norm(z));
}

}  // namespace

TEST_CASE("class bounds") {
    const DacClass c = DacClass::make(2.0, 0.5, 0.1, 4);
    CHECK(c.a == 16.0);
    CHECK(c.decay == doctest::Approx(0.95));
    CHECK(c.bound(1) == doctest::Approx(1.6));
    CHECK(c.bound(3) == doctest::Approx(1.6 * 0.95 * 0.95));
    const DacClass d = DacClass::make(2.0, 0.5, 0.1, 4, DecayBase::OneMinusGamma, 3.0);
    CHECK(d.a == 3.0);
    CHECK(d.decay == doctest::Approx(0.5));
    CHECK_THROWS_AS(DacClass::make(2.0, 1.5, 0.1, 4, DecayBase::OneMinusGamma), ContractViolation);
    CHECK_THROWS_AS(DacClass::make(2.0, 0.5, 0.1, 0), ContractViolation);
}

TEST_CASE("projection of a diagonal block clips singular values") {
    Matrix b = Matrix::Zero(2, 2);
    b.diagonal() << 3.0, 0.5;
    const Matrix p = project_block(b, 1.0);
    CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(p(0, 1)) < 1e-14);
    const Matrix r = radial_scale_block(b, 1.0);
    CHECK(r(1, 1) == doctest::Approx(0.5 / 3.0));
    CHECK((p - b).norm() < (r - b).norm());
}

TEST_CASE("projection satisfies the variational inequality (property)") {
    // P is the Euclidean projection iff <X - P, Z - P> <= 0 for every Z in the ball.
    testgen::Gen g(41);
    for (int k = 0; k < 200; ++k) {
        const int r = g.integer(1, 3), c = g.integer(1, 3);
        const double bound = g.uniform(0.1, 2.0);
        const Matrix X = g.matrix(r, c) * g.uniform(0.0, 4.0);
        const Matrix P = project_block(X, bound);
        CHECK(spectral_norm(P) <= bound);
        for (int j = 0; j < 10; ++j) {
            const Matrix Z = in_ball(g, r, c, bound);
            CHECK(((X - P).array() * (Z - P).array()).sum() <= 1e-12 * std::max(1.0, X.squaredNorm()));
        }
        CHECK((P - X).norm() <= (radial_scale_block(X, bound) - X).norm() + 1e-12);
    }
}

TEST_CASE("projection is idempotent and leaves feasible points unchanged (property)") {
    testgen::Gen g(43);
    for (int k = 0; k < 200; ++k) {
        const int l = g.integer(1, 6), du = g.integer(1, 2), dx = g.integer(1, 3);
        const DacClass cls = DacClass::make(g.uniform(1.0, 3.0), g.uniform(0.1, 1.0), g.uniform(0.01, 0.5), l);
        std::vector<Matrix> raw;
        for (int i = 1; i <= l; ++i) raw.push_back(g.matrix(du, dx) * cls.bound(i) * g.uniform(0.0, 3.0));
        const DacParams P = project(raw, cls);
        CHECK(P.in_class());
        const DacParams PP = project(P.blocks(), cls);
        for (int i = 1; i <= l; ++i) {
            CHECK((PP.block(i).array() == P.block(i).array()).all());
            if (spectral_norm(raw[i - 1]) <= cls.bound(i)) CHECK((P.block(i).array() == raw[i - 1].array()).all());
        }
    }
}

TEST_CASE("flat layout round-trip") {
    testgen::Gen g(44);
    const DacClass cls = DacClass::make(2.0, 0.5, 0.1, 3);
    std::vector<Matrix> blocks{g.matrix(2, 3), g.matrix(2, 3), g.matrix(2, 3)};
    const DacParams p(blocks, cls);
    const auto flat = p.to_flat();
    REQUIRE(flat.size() == 3 + 18);
    CHECK(flat[0] == 3);
    CHECK(flat[1] == 2);
    CHECK(flat[2] == 3);
    CHECK(flat[3 + 1] == blocks[0](0, 1));  // row-major
    const DacParams q = DacParams::from_flat(flat, cls);
    for (int i = 1; i <= 3; ++i) CHECK((q.block(i).array() == p.block(i).array()).all());
    CHECK(q.hash() == p.hash());
    auto bad = flat;
    bad.pop_back();
    CHECK_THROWS_AS(DacParams::from_flat(bad, cls), ContractViolation);
    CHECK_THROWS_AS(DacParams(std::vector<Matrix>{g.matrix(2, 3)}, cls), ContractViolation);
}

TEST_CASE("noise buffer lags with zero history") {
    NoiseBuffer buf(2, 3);
    CHECK(buf.lag(1).isZero());
    buf.push((Vector(2) << 1, 2).finished());
    buf.push((Vector(2) << 3, 4).finished());
    CHECK(buf.lag(1)(0) == 3.0);
    CHECK(buf.lag(2)(1) == 2.0);
    CHECK(buf.lag(3).isZero());
    buf.push(Vector::Zero(2));
    buf.push(Vector::Zero(2));
    CHECK_THROWS_AS(buf.lag(4), ContractViolation);
    CHECK(buf.W0() == doctest::Approx(5.0));
}

TEST_CASE("disturbance estimate inverts an Euler step") {
    testgen::Gen g(45);
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(g.matrix(3, 3), g.matrix(3, 2));
    const Vector x = g.vector(3), u = g.vector(2), w = g.vector(3);
    const double h = 0.03;
    const Vector x1 = x + h * (sys.A() * x + sys.B() * u + w);
    CHECK((estimate_disturbance(sys, x, u, x1, h) - w).norm() < 1e-12);
}

TEST_CASE("DAC action and the reversed stack agree with the defining sum") {
    testgen::Gen g(46);
    const int l = 4, du = 2, dx = 3;
    const DacClass cls = DacClass::make(2.0, 0.5, 0.1, l);
    std::vector<Matrix> blocks;
    for (int i = 0; i < l; ++i) blocks.push_back(g.matrix(du, dx));
    const DacParams p(blocks, cls);
    NoiseBuffer buf(dx, l);
    std::vector<Vector> hist;
    for (int s = 0; s < 6; ++s) {
        hist.push_back(g.vector(dx));
        buf.push(hist.back());
    }
    const Matrix K = g.matrix(du, dx);
    const Vector x = g.vector(dx);
    Vector expect = -K * x;
    for (int i = 1; i <= l; ++i) expect += blocks[i - 1] * hist[hist.size() - i];
    CHECK((dac_action(K, x, p, buf) - expect).norm() < 1e-12);

    Vector window(l * dx);
    for (int j = 0; j < l; ++j) window.segment(j * dx, dx) = hist[hist.size() - l + j];
    CHECK((p.reversed_stack() * window - K * x - expect).norm() < 1e-12);
}

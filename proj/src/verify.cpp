#include "nsc/verify.hpp"

#include "nsc/benchmarks.hpp"
#include "nsc/experiment.hpp"
#include "nsc/report.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace nsc {

namespace {

/// Box-Muller on raw mt19937_64 output, so draws are identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return std::sqrt(-2.0 * std::log(uniform())) * std::cos(2.0 * std::numbers::pi * uniform()); }
    int integer(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    Matrix normal(int r, int c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal();
        return m;
    }
    Vector normal_vec(int n) { return normal(n, 1); }

private:
    std::mt19937_64 eng_;
};

/// A random system with a certified LQR gain.
struct Instance {
    SystemDynamics sys;
    Matrix K;
    double h;
    double kappa;
    double gamma;
};

Instance random_instance(Rng& rng, double h) {
    for (;;) {
        const int dx = rng.integer(1, 3);
        const int du = rng.integer(1, 2);
        const Matrix A = 0.6 * rng.normal(dx, dx);
        const Matrix B = rng.normal(dx, du);
        try {
            SystemDynamics sys = SystemDynamics::with_tight_bounds(A, B);
            Matrix K = lqr_gain(sys, Matrix::Identity(dx, dx), Matrix::Identity(du, du));
            const auto [kappa, gamma] = best_certificate(sys, K, h);
            return {std::move(sys), std::move(K), h, kappa, gamma};
        } catch (const Error&) {
            // Poorly conditioned draw; take the next one.
        }
    }
}

/// Random blocks with ||M^i|| = u_i * bound(i), u_i uniform in [0, 1].
DacParams random_in_class(Rng& rng, const DacClass& cls, int du, int dx) {
    std::vector<Matrix> blocks;
    for (int i = 1; i <= cls.l; ++i) {
        Matrix b = rng.normal(du, dx);
        const double nb = spectral_norm(b);
        blocks.push_back(nb > 0.0 ? Matrix(b * (rng.uniform() * cls.bound(i) / nb)) : b);
    }
    return DacParams(std::move(blocks), cls);
}

CheckResult make(const std::string& suite, const std::string& name, bool pass, double measured, double bound,
                 std::string detail = {}) {
    return {suite, name, pass, measured, bound, std::move(detail)};
}

// ---------------------------------------------------------------------------
// lemmas

CheckResult check_psi_identity() {
    Rng rng(101);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Instance in = random_instance(rng, 0.05);
        const int dx = in.sys.state_dim(), du = in.sys.action_dim();
        const int H = rng.integer(1, 3), m = rng.integer(1, 4), l = H * m;
        const DacClass cls = DacClass::make(in.kappa, in.gamma, in.h, l);
        DisturbanceHistory hist(dx, 2L * l + 1, 0);
        const long count = 6L * l + 4;
        for (long s = 0; s < count; ++s) hist.push(rng.normal_vec(dx));
        IdealWindow win;
        win.sys = &in.sys;
        win.K = in.K;
        win.h = in.h;
        win.m = m;
        win.H = H;
        win.k = (count - 1) / m;
        win.history = &hist;
        for (int j = 0; j < H + 2; ++j) win.slow.push_back(random_in_class(rng, cls, du, dx));
        const long t = win.k * m + rng.integer(0, m - 1);
        if (t >= count) continue;
        const IdealStateAction sa = ideal_state_action(win, t);

        // Literal recursion from a zero state l + 1 samples back.
        const Matrix Q = closed_loop_matrix(in.sys, in.K, in.h);
        Vector x = Vector::Zero(dx);
        for (long s = t - 1 - l; s < t; ++s) {
            const DacParams& M = win.params_at(s);
            Vector z = Vector::Zero(du);
            for (int i = 1; i <= l; ++i) z += M.block(i) * hist.at(s - i);
            x = Q * x + in.h * (hist.at(s) + in.sys.B() * z);
        }
        worst = std::max(worst, (sa.y - x).norm() / std::max(x.norm(), 1e-300));
    }
    return make("lemmas", "psi-identity", worst <= 1e-9, worst, 1e-9, "100 seeded windows, closed form vs recursion");
}

CheckResult check_psi_bound(bool tamper) {
    Rng rng(202);
    double worst = 0.0;
    long violations = 0;
    std::string first;
    for (int inst = 0; inst < 1000; ++inst) {
        const Instance in = random_instance(rng, 0.05);
        const int dx = in.sys.state_dim(), du = in.sys.action_dim();
        const int l = rng.integer(1, 4) * rng.integer(1, 4);
        const DacClass cls = DacClass::make(in.kappa, in.gamma, in.h, l);
        std::vector<DacParams> by_lag;
        for (int j = 0; j <= l; ++j) by_lag.push_back(random_in_class(rng, cls, du, dx));
        const PsiCoefficients psi = psi_table(in.K, in.sys, in.h, by_lag, 2 * l);
        const double decay = tamper ? 1.0 - in.gamma : cls.decay;
        for (int i = 0; i <= 2 * l; ++i) {
            const double ratio =
                spectral_norm(psi.psi[i]) / psi_bound(cls.a, l, in.h, in.sys.kappa_B(), in.kappa, decay, i);
            worst = std::max(worst, ratio);
            if (ratio > 1.0) {
                if (violations == 0) first = "first violation: instance " + std::to_string(inst) + " index i = " + std::to_string(i);
                ++violations;
            }
        }
    }
    std::string detail = violations ? first + " (" + std::to_string(violations) + " violations)" : "1000 seeded in-class draws";
    if (tamper) detail += ", bound evaluated with decay 1 - gamma";
    return make("lemmas", "psi-bound", violations == 0, worst, 1.0, detail);
}

CheckResult check_estimate_order() {
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0));
    const DisturbanceSignal w = DisturbanceSignal::sinusoid(1, {0.5, 1.0, 0.0, Vector::Ones(1)}, 0.5);
    const Matrix K = Matrix::Constant(1, 1, 2.0);
    std::vector<double> err;
    for (double h : {0.1, 0.05, 0.025}) {
        const long n = sample_count(10.0, h);
        Vector x = Vector::Zero(1);
        double e = 0.0;
        for (long r = 0; r < n; ++r) {
            const double t = static_cast<double>(r) * h;
            const Vector u = -K * x;
            const Vector x1 = integrate_step(sys, w, t, x, u, h, 64).x1;
            e = std::max(e, (estimate_disturbance(sys, x, u, x1, h) - w.value(t)).norm());
            x = x1;
        }
        err.push_back(e);
    }
    const double r1 = err[0] / err[1], r2 = err[1] / err[2];
    const bool ok = r1 >= 1.7 && r1 <= 2.3 && r2 >= 1.7 && r2 <= 2.3;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max error %.3e, %.3e, %.3e at h = 0.1, 0.05, 0.025; ratios %.3f, %.3f", err[0],
                  err[1], err[2], r1, r2);
    return make("lemmas", "estimate-order", ok, std::max(std::abs(r1 - 2.0), std::abs(r2 - 2.0)), 0.3, buf);
}

CheckResult check_projection() {
    Rng rng(303);
    long violations = 0;
    double worst_expansion = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
        const int du = rng.integer(1, 3), dx = rng.integer(1, 3), l = rng.integer(1, 5);
        const DacClass cls = DacClass::make(rng.uniform(1.0, 3.0), rng.uniform(0.1, 2.0), rng.uniform(0.01, 0.2), l);
        std::vector<Matrix> raw;
        for (int i = 1; i <= l; ++i) raw.push_back(rng.normal(du, dx) * (cls.bound(i) * rng.uniform(0.0, 3.0)));
        const DacParams P = project(raw, cls);
        const DacParams PP = project(P.blocks(), cls);
        const DacParams Z = random_in_class(rng, cls, du, dx);
        for (int i = 1; i <= l; ++i) {
            if (!(PP.block(i).array() == P.block(i).array()).all()) ++violations;
            if (spectral_norm(P.block(i)) > cls.bound(i)) ++violations;
            const double before = (raw[i - 1] - Z.block(i)).norm();
            const double after = (P.block(i) - Z.block(i)).norm();
            worst_expansion = std::max(worst_expansion, after - before);
            if (after > before + 1e-12 * std::max(1.0, before)) ++violations;
            const double radial = (radial_scale_block(raw[i - 1], cls.bound(i)) - raw[i - 1]).norm();
            if ((P.block(i) - raw[i - 1]).norm() > radial + 1e-12 * std::max(1.0, radial)) ++violations;
        }
    }
    return make("lemmas", "projection", violations == 0, static_cast<double>(violations), 0.0,
                "1000 seeded pairs: idempotence, feasibility, non-expansiveness, clip <= radial distance");
}

Experiment benchmark(const std::string& name) { return resolve_experiment(builtin_benchmark(name)); }

CheckResult check_comparator() {
    // Scalar benchmark at h = 0.1, m = 10; the comparator is the hindsight gain.
    nlohmann::json doc = builtin_benchmark("scalar");
    doc["controller"]["h"] = 0.1;
    doc["controller"]["m"] = 10;
    doc["controller"]["H"] = 4;
    // Hindsight gain restricted to the run gain's own certificate class.
    doc["baseline"].erase("kappa");
    doc["baseline"].erase("gamma");
    const Experiment ex = resolve_experiment(doc);
    const RunLog log = run(ex.sys, ex.dist, ex.cost, ex.controller);
    const BaselineResult base = compute_baseline(ex);
    const double h = ex.controller.h;
    const auto [k1, g1] = best_certificate(ex.sys, ex.controller.K, h);
    const auto [k2, g2] = best_certificate(ex.sys, base.K_star, h);
    const double kappa = std::max(k1, k2), gamma = std::min(g1, g2);
    const long n = static_cast<long>(log.samples.size());
    DisturbanceHistory hist(ex.sys.state_dim(), 81, n);
    for (const auto& r : log.samples) hist.push(r.w_hat);

    std::vector<double> ls, gaps;
    bool under = true;
    std::string detail;
    for (int H : {1, 2, 4}) {
        const int l = H * 10;
        const DacClass cls = DacClass::make(kappa, gamma, h, l);
        ComparatorGap g;
        try {
            g = comparator_gap(ex.sys, ex.cost, ex.controller.K, base.K_star, cls, hist, n);
        } catch (const ComparatorOutOfClass& e) {
            return make("lemmas", "comparator", false, 0.0, 0.0, e.what());
        }
        const double bound = ex.cost.constants().G * g.D * g.W0 * kappa * kappa * kappa * cls.a *
                             (l * h * ex.sys.kappa_B() + 1.0) * std::pow(1.0 - h * gamma, l);
        under = under && g.max_gap <= bound;
        ls.push_back(l);
        gaps.push_back(g.gap);
    }
    double lb = 0, gb = 0;
    for (int i = 0; i < 3; ++i) {
        lb += ls[i] / 3;
        gb += std::log(gaps[i]) / 3;
    }
    double num = 0, den = 0;
    for (int i = 0; i < 3; ++i) {
        num += (ls[i] - lb) * (std::log(gaps[i]) - gb);
        den += (ls[i] - lb) * (ls[i] - lb);
    }
    const double ratio = std::exp(10.0 * num / den);
    const double limit = std::pow(1.0 - h * gamma, 10);
    char buf[160];
    std::snprintf(buf, sizeof buf, "gap %.3e, %.3e, %.3e at Hm = 10, 20, 40; per-slow-step ratio vs (1-h gamma)^m%s",
                  gaps[0], gaps[1], gaps[2], under ? "" : "; per-sample bound exceeded");
    return make("lemmas", "comparator", ratio <= limit && under, ratio, limit, buf);
}

CheckResult check_decomposition() {
    const Experiment ex = benchmark("scalar");
    const ExperimentOutcome out = run_experiment(ex);
    const double res = out.regret->identity_residual(ex.controller.h);
    return make("lemmas", "decomposition", res <= 1e-8, res, 1e-8,
                "scalar benchmark, regret = " + format_double(out.regret->regret));
}

CheckResult check_boundedness() {
    nlohmann::json doc = builtin_benchmark("planar");
    Experiment ex = resolve_experiment(doc);
    doc["controller"]["h"] = ex.controller.h;
    doc["controller"]["H"] = ex.controller.H;
    doc["controller"]["m"] = ex.controller.m;
    doc["controller"]["T"] = 2.0 * ex.controller.T;
    const Experiment ex2 = resolve_experiment(doc);
    const RunLog a = run(ex.sys, ex.dist, ex.cost, ex.controller);
    const RunLog b = run(ex2.sys, ex2.dist, ex2.cost, ex2.controller);
    const double dx = std::abs(b.max_x / a.max_x - 1.0);
    const double du = std::abs(b.max_u / a.max_u - 1.0);
    const double dw = std::abs(b.W0 / a.W0 - 1.0);
    const double worst = std::max({dx, du, dw});
    char buf[128];
    std::snprintf(buf, sizeof buf, "T -> 2T relative change: max|x| %.4f, max|u| %.4f, W0 %.4f", dx, du, dw);
    return make("lemmas", "boundedness", worst <= 0.05, worst, 0.05, buf);
}

// ---------------------------------------------------------------------------
// gradients

struct GradInstance {
    Instance in;
    CostFn cost;
    DacClass cls;
    DisturbanceHistory hist;
    long t0;
    long t1;
};

GradInstance random_grad_instance(Rng& rng, bool force_fd) {
    Instance in = random_instance(rng, 0.05);
    const int dx = in.sys.state_dim(), du = in.sys.action_dim();
    const int l = rng.integer(2, 6);
    const DacClass cls = DacClass::make(in.kappa, in.gamma, in.h, l);
    DisturbanceHistory hist(dx, 2L * l + 1, 0);
    const long count = 40;
    for (long s = 0; s < count; ++s) hist.push(rng.normal_vec(dx));
    Matrix Qc = rng.normal(dx, dx);
    Matrix Rc = rng.normal(du, du);
    CostFn cost = CostFn::quadratic(Qc * Qc.transpose() + 0.1 * Matrix::Identity(dx, dx),
                                    Rc * Rc.transpose() + 0.1 * Matrix::Identity(du, du));
    if (force_fd) cost = cost.without_gradients();
    const long t0 = rng.integer(0, 20);
    return {std::move(in), std::move(cost), cls, std::move(hist), t0, t0 + rng.integer(1, 19)};
}

CheckResult check_grad_fd(bool force_fd) {
    Rng rng(404);
    double worst = 0.0;
    bool fallback_flag = true;
    for (int inst = 0; inst < 20; ++inst) {
        const GradInstance g = random_grad_instance(rng, force_fd);
        const IdealObjective obj(g.in.sys, g.in.K, g.in.h, g.cost, g.cls.l);
        const int dx = g.in.sys.state_dim(), du = g.in.sys.action_dim();
        const DacParams M = random_in_class(rng, g.cls, du, dx);
        const auto res = obj.evaluate(M, g.hist, g.t0, g.t1, g.t1, 1.0, true);
        fallback_flag = fallback_flag && (res.fd_fallback == force_fd);
        double gmax = 0.0;
        for (const auto& b : res.grad) gmax = std::max(gmax, b.cwiseAbs().maxCoeff());
        for (int c = 0; c < 20; ++c) {
            const int i = rng.integer(1, g.cls.l), r = rng.integer(0, du - 1), s = rng.integer(0, dx - 1);
            const double step = 1e-4 * g.cls.bound(1);
            std::vector<Matrix> plus = M.blocks(), minus = M.blocks();
            plus[i - 1](r, s) += step;
            minus[i - 1](r, s) -= step;
            const double fp = obj.evaluate(DacParams(plus, g.cls), g.hist, g.t0, g.t1, g.t1, 1.0, false).value;
            const double fm = obj.evaluate(DacParams(minus, g.cls), g.hist, g.t0, g.t1, g.t1, 1.0, false).value;
            const double fd = (fp - fm) / (2.0 * step);
            const double an = res.grad[i - 1](r, s);
            worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3 * std::max(gmax, 1e-12)));
        }
    }
    std::string detail = std::string("20 instances x 20 coordinates, central differences") +
                         (force_fd ? ", cost gradients by finite differences" : "");
    if (!fallback_flag) detail += "; fallback flag mismatch";
    return make("gradients", force_fd ? "grad-fd (forced fallback)" : "grad-fd", worst <= 1e-5 && fallback_flag, worst,
                1e-5, detail);
}

CheckResult check_convexity() {
    Rng rng(505);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const GradInstance g = random_grad_instance(rng, false);
        const IdealObjective obj(g.in.sys, g.in.K, g.in.h, g.cost, g.cls.l);
        const int dx = g.in.sys.state_dim(), du = g.in.sys.action_dim();
        for (int rep = 0; rep < 4; ++rep) {
            const DacParams A = random_in_class(rng, g.cls, du, dx), B = random_in_class(rng, g.cls, du, dx);
            const double lam = rng.uniform();
            std::vector<Matrix> mix;
            for (int i = 1; i <= g.cls.l; ++i) mix.push_back(lam * A.block(i) + (1.0 - lam) * B.block(i));
            auto f = [&](const DacParams& M) { return obj.evaluate(M, g.hist, g.t0, g.t1, g.t1, 1.0, false).value; };
            const double lhs = f(DacParams(mix, g.cls));
            const double rhs = lam * f(A) + (1.0 - lam) * f(B);
            worst = std::max(worst, (lhs - rhs) / std::max(1.0, std::abs(rhs)));
        }
    }
    return make("gradients", "convexity", worst <= 1e-9, worst, 1e-9, "200 seeded chords");
}

CheckResult check_grad_bound() {
    const Experiment ex = benchmark("planar");
    const RunLog log = run(ex.sys, ex.dist, ex.cost, ex.controller);
    const ControllerConfig& c = ex.controller;
    const double D = std::max(log.max_x, log.max_u);
    const double C = c.m * c.h;
    const double kappa = c.cert.kappa;
    const double bound =
        ex.cost.constants().G * D * C * kappa * kappa * (kappa + 1.0) * log.W0 * ex.sys.kappa_B() / c.cert.gamma;
    double worst = 0.0;
    for (const auto& s : log.slow) worst = std::max(worst, c.h * s.grad_norm);
    return make("gradients", "grad-bound", worst <= bound, worst, bound,
                "planar benchmark, Frobenius norm of the gradient in step coordinates (h times the block gradient)");
}

// ---------------------------------------------------------------------------
// stability

CheckResult check_lqr() {
    Rng rng(606);
    double worst = 0.0;
    bool hurwitz = true;
    for (int inst = 0; inst < 20; ++inst) {
        const int dx = rng.integer(1, 4), du = rng.integer(1, 2);
        const SystemDynamics sys = SystemDynamics::with_tight_bounds(rng.normal(dx, dx), rng.normal(dx, du));
        const Matrix Q = Matrix::Identity(dx, dx), R = Matrix::Identity(du, du);
        Matrix K;
        try {
            K = lqr_gain(sys, Q, R);
        } catch (const SynthesisError&) {
            continue;
        }
        // X from K = R^{-1} B' X solved back through the closed-loop Lyapunov equation.
        const Matrix Acl = sys.A() - sys.B() * K;
        const Matrix X = solve_lyapunov(Acl, Q + K.transpose() * R * K);
        const Matrix res = sys.A().transpose() * X + X * sys.A() -
                           X * sys.B() * R.inverse() * sys.B().transpose() * X + Q;
        worst = std::max(worst, res.norm() / std::max(1.0, X.norm()));
        hurwitz = hurwitz && spectral_abscissa(Acl) < 0.0;
    }
    return make("stability", "lqr-riccati", worst <= 1e-9 && hurwitz, worst, 1e-9,
                hurwitz ? "20 seeded systems" : "closed loop not Hurwitz");
}

CheckResult check_certificates() {
    Rng rng(707);
    double worst = 0.0;
    long failures = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const Instance in = random_instance(rng, rng.uniform(0.01, 0.1));
        const CertifyResult cr = certify(in.sys, in.K, in.h, in.kappa, in.gamma);
        if (!cr.accepted()) {
            ++failures;
            continue;
        }
        const StablePolicyCert& c = *cr.cert;
        const int n = in.sys.state_dim();
        for (std::size_t j = 0; j < c.verified_h.size(); ++j)
            if (c.Lh_norm[j] > (1.0 - c.verified_h[j] * c.gamma) * (1.0 + 1e-12)) ++failures;
        const Matrix Q = Matrix::Identity(n, n) + in.h * (in.sys.A() - in.sys.B() * in.K);
        const Matrix L = c.Pinv * Q * c.P;
        worst = std::max(worst, (c.P * L * c.Pinv - Q).norm() / Q.norm());
        if (c.verified_h.size() != 3) ++failures;
    }
    return make("stability", "certificates", failures == 0 && worst <= 1e-10, worst, 1e-10,
                "50 seeded LQR gains certified at h, h/2, h/4; " + std::to_string(failures) + " failures");
}

CheckResult check_schur_fallback() {
    // Double pole at -1 with a single eigenvector.
    Matrix A(2, 2), B(2, 1), K(1, 2);
    A << 0, 1, 0, 0;
    B << 0, 1;
    K << 1, 2;
    const SystemDynamics sys = SystemDynamics::with_tight_bounds(A, B);
    try {
        const auto [kappa, gamma] = best_certificate(sys, K, 0.05);
        const CertifyResult cr = certify(sys, K, 0.05, kappa, gamma);
        const bool ok = cr.accepted() && cr.cert->schur_fallback;
        return make("stability", "schur-fallback", ok && gamma > 0.0, gamma, 0.0,
                    ok ? "defective closed loop certified via scaled Schur form, measured = certified gamma"
                       : "fallback not used");
    } catch (const Error& e) {
        return make("stability", "schur-fallback", false, 0.0, 0.0, e.what());
    }
}

CheckResult check_refusal() {
    const SystemDynamics sys =
        SystemDynamics::with_tight_bounds(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0));
    bool refused = false;
    try {
        best_certificate(sys, Matrix::Constant(1, 1, 0.5), 0.05);
    } catch (const NotStronglyStable&) {
        refused = true;
    } catch (const CertificationInfeasible&) {
        refused = true;
    }
    return make("stability", "unstable-refused", refused, refused ? 1.0 : 0.0, 1.0, "x' = x + u with K = 0.5");
}

}  // namespace

std::vector<CheckResult> run_verify(const std::string& suite, const VerifyOptions& opts) {
    const bool all = suite == "all";
    if (!all && suite != "lemmas" && suite != "gradients" && suite != "stability")
        throw ContractViolation("verify: unknown suite '" + suite + "' (lemmas, gradients, stability, all)");
    std::vector<CheckResult> out;
    if (all || suite == "lemmas") {
        out.push_back(check_psi_identity());
        out.push_back(check_psi_bound(opts.tamper_decay));
        out.push_back(check_estimate_order());
        out.push_back(check_projection());
        out.push_back(check_comparator());
        out.push_back(check_decomposition());
        out.push_back(check_boundedness());
    }
    if (all || suite == "gradients") {
        out.push_back(check_grad_fd(opts.force_fd));
        out.push_back(check_convexity());
        out.push_back(check_grad_bound());
    }
    if (all || suite == "stability") {
        out.push_back(check_lqr());
        out.push_back(check_certificates());
        out.push_back(check_schur_fallback());
        out.push_back(check_refusal());
    }
    return out;
}

std::string format_check(const CheckResult& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " measured=%.6g bound=%.6g", r.measured, r.bound);
    return std::string(r.pass ? "PASS " : "FAIL ") + r.suite + "/" + r.name + buf + (r.detail.empty() ? "" : "  " + r.detail);
}

}  // namespace nsc

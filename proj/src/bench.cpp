#include "nsc/bench.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace nsc {

ComparatorOutOfClass::ComparatorOutOfClass(int index, double norm, double bound)
    : Error("comparator block " + std::to_string(index) + " has norm " + std::to_string(norm) +
            " above the class bound " + std::to_string(bound)),
      index_(index) {}

// ---------------------------------------------------------------------------
// Linear policy evaluation on a replay

namespace {

struct ClosedLoopTables {
    Matrix F;   // Phi - Gamma K
    Matrix SK;  // E'SE, E = [I; -K]
};

ClosedLoopTables closed_loop_tables(const SampledReplay& replay, const Matrix& K, long r) {
    const auto dx = K.cols();
    const auto du = K.rows();
    Matrix E(dx + du, dx);
    E << Matrix::Identity(dx, dx), -K;
    return {replay.Phi(r) - replay.Gamma(r) * K, E.transpose() * replay.S(r) * E};
}

}  // namespace

PolicyEvaluation evaluate_policy(const SampledReplay& replay, const Matrix& K) {
    const long n = replay.intervals();
    const auto dx = K.cols();
    const auto du = K.rows();
    if (replay.Phi(0).rows() != dx || replay.Gamma(0).cols() != du)
        throw ContractViolation("evaluate_policy: gain shape does not match the replay");

    const ClosedLoopTables full = closed_loop_tables(replay, K, 0);
    const ClosedLoopTables last = closed_loop_tables(replay, K, n - 1);
    const Matrix Kt = K.transpose();
    const Matrix Ssample = replay.cost_Q() + Kt * replay.cost_R() * K;
    const double w_last = replay.interval_length(n - 1) / replay.h();

    PolicyEvaluation ev;
    Vector x = Vector::Zero(dx), xn(dx), es(dx), tmp(dx);
    for (long r = 0; r < n; ++r) {
        const ClosedLoopTables& tb = (r == n - 1) ? last : full;
        const Vector& s = replay.s(r);
        es = s.head(dx);
        es.noalias() -= Kt * s.tail(du);
        tmp.noalias() = tb.SK * x;
        ev.J += x.dot(tmp) + 2.0 * es.dot(x) + replay.k(r);
        tmp.noalias() = Ssample * x;
        const double cs = x.dot(tmp) + 2.0 * replay.sample_q(r).dot(x) + replay.sample_c0(r);
        ev.S += (r == n - 1 ? w_last : 1.0) * cs;
        const double nx = x.norm();
        ev.max_x = std::max(ev.max_x, nx);
        tmp.noalias() = K * x;
        ev.max_u = std::max(ev.max_u, tmp.norm());
        xn.noalias() = tb.F * x;
        xn += replay.d(r);
        x.swap(xn);
        if (!std::isfinite(nx)) throw IntegrationDivergence(replay.interval_start(r));
    }
    if (!std::isfinite(ev.J)) throw IntegrationDivergence(replay.horizon());
    return ev;
}

void policy_trajectory(const SampledReplay& replay, const Matrix& K, std::vector<Vector>& xs, std::vector<Vector>& us) {
    const long n = replay.intervals();
    xs.clear();
    us.clear();
    Vector x = Vector::Zero(K.cols());
    for (long r = 0; r < n; ++r) {
        const Vector u = -K * x;
        xs.push_back(x);
        us.push_back(u);
        x = replay.step(r, x, u);
    }
}

double eval_linear_policy(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                          const Matrix& K, double T, double h, int substeps) {
    const SampledReplay replay(sys, dist, cost, T, h, substeps);
    return evaluate_policy(replay, K).J;
}

double eval_linear_policy_continuous(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                                     const Matrix& K, double T, double h, int substeps) {
    if (substeps < 2) throw QuadratureResolutionError("continuous evaluation needs >= 2 substeps");
    const long n = sample_count(T, h);
    const Matrix Acl = sys.A() - sys.B() * K;
    Vector x = Vector::Zero(sys.state_dim());
    double J = 0.0;
    for (long r = 0; r < n; ++r) {
        const double t0 = static_cast<double>(r) * h;
        const double len = (r == n - 1) ? T - t0 : h;
        const double dt = len / substeps;
        const auto w = simpson_weights(substeps, dt);
        J += w[0] * cost.value(t0, x, -K * x);
        for (int j = 0; j < substeps; ++j) {
            const double t = t0 + j * dt;
            const Vector k1 = Acl * x + dist.value(t);
            const Vector wm = dist.value(t + 0.5 * dt);
            const Vector k2 = Acl * (x + 0.5 * dt * k1) + wm;
            const Vector k3 = Acl * (x + 0.5 * dt * k2) + wm;
            const Vector k4 = Acl * (x + dt * k3) + dist.value(t + dt);
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite()) throw IntegrationDivergence(t + dt);
            J += w[j + 1] * cost.value(t + dt, x, -K * x);
        }
    }
    return J;
}

// ---------------------------------------------------------------------------
// Best linear policy in hindsight

namespace {

bool better(const TraceEntry& a, const TraceEntry& b) {
    if (a.J != b.J) return a.J < b.J;
    const double na = a.K.norm(), nb = b.K.norm();
    if (na != nb) return na < nb;
    return std::lexicographical_compare(a.K.data(), a.K.data() + a.K.size(), b.K.data(), b.K.data() + b.K.size(),
                                        [](double x, double y) { return x < y; });
}

struct Candidate {
    bool certified = false;
    double excess = 0.0;  ///< relative violation of the first refused condition
    double J = 0.0;
};

Candidate assess(const SystemDynamics& sys, const SampledReplay& replay, const Matrix& K, double kappa,
                 double gamma) {
    Candidate c;
    if (!K.allFinite()) {
        c.excess = 1e6;
        return c;
    }
    try {
        const CertifyResult res = certify(sys, K, replay.h(), kappa, gamma);
        if (!res.accepted()) {
            c.excess = (res.refusal->measured - res.refusal->limit) / std::max(std::abs(res.refusal->limit), 1e-3);
            return c;
        }
    } catch (const CertificationInfeasible&) {
        c.excess = 1.0;
        return c;
    }
    try {
        c.J = evaluate_policy(replay, K).J;
        c.certified = std::isfinite(c.J);
    } catch (const IntegrationDivergence&) {
        c.excess = 1.0;
    }
    return c;
}

Matrix unflatten(const double* v, Eigen::Index rows, Eigen::Index cols) {
    Matrix K(rows, cols);
    for (Eigen::Index i = 0; i < K.size(); ++i) K.data()[i] = v[i];
    return K;
}

struct NmContext {
    const SystemDynamics* sys;
    const SampledReplay* replay;
    double kappa;
    double gamma;
    Eigen::Index rows;
    Eigen::Index cols;
    double penalty_base;
    std::vector<TraceEntry>* visited;
};

double nm_objective(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<NmContext*>(params);
    const Matrix K = unflatten(gsl_vector_const_ptr(v, 0), ctx->rows, ctx->cols);
    const Candidate c = assess(*ctx->sys, *ctx->replay, K, ctx->kappa, ctx->gamma);
    if (c.certified) {
        ctx->visited->push_back({K, c.J});
        return c.J;
    }
    // GSL needs finite values; slope the penalty toward the certified region.
    return ctx->penalty_base * (1.0 + std::min(c.excess, 1e6));
}

std::vector<TraceEntry> nelder_mead(const NmContext& proto, const Matrix& start, int max_iter) {
    std::vector<TraceEntry> visited;
    NmContext ctx = proto;
    ctx.visited = &visited;
    const auto dim = static_cast<std::size_t>(start.size());

    gsl_vector* x = gsl_vector_alloc(dim);
    gsl_vector* step = gsl_vector_alloc(dim);
    for (std::size_t i = 0; i < dim; ++i) gsl_vector_set(x, i, start.data()[i]);
    gsl_vector_set_all(step, 0.25 * std::max(0.5, start.norm() / std::sqrt(static_cast<double>(dim))));

    gsl_multimin_function fn{&nm_objective, dim, &ctx};
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int it = 0; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        const double size = gsl_multimin_fminimizer_size(s);
        if (gsl_multimin_test_size(size, 1e-7) == GSL_SUCCESS) break;
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);

    // Keep only the best visited point of this start.
    std::vector<TraceEntry> out;
    if (!visited.empty()) out.push_back(*std::min_element(visited.begin(), visited.end(), better));
    return out;
}

double gaussian(std::mt19937_64& rng) {
    auto u01 = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    return std::sqrt(-2.0 * std::log(u01())) * std::cos(2.0 * std::numbers::pi * u01());
}

}  // namespace

BaselineResult best_in_hindsight(const SystemDynamics& sys, const SampledReplay& replay, const CostFn& cost,
                                 double kappa, double gamma, const BaselineOptions& opts) {
    gsl_set_error_handler_off();
    const auto du = sys.action_dim();
    const auto dx = sys.state_dim();

    // Deterministic start list: LQR, zero, injected gains, then seeded perturbations.
    std::vector<Matrix> proposals;
    if (opts.lqr_weights) {
        try {
            proposals.push_back(lqr_gain(sys, opts.lqr_weights->first, opts.lqr_weights->second));
        } catch (const SynthesisError&) {
        }
    } else {
        try {
            proposals.push_back(lqr_gain(sys, cost.Q() + 1e-9 * Matrix::Identity(dx, dx), cost.R()));
        } catch (const Error&) {
        }
    }
    proposals.push_back(Matrix::Zero(du, dx));
    for (const auto& K : opts.extra_starts) proposals.push_back(K);

    BaselineResult out;
    out.kappa = kappa;
    out.gamma = gamma;
    std::vector<Matrix> starts;
    for (const auto& K : proposals) {
        if (static_cast<int>(starts.size()) >= opts.multistarts) break;
        const Candidate c = assess(sys, replay, K, kappa, gamma);
        if (c.certified) {
            starts.push_back(K);
            out.trace.push_back({K, c.J});
        }
    }
    if (starts.empty()) throw EmptyClass("best_in_hindsight: no certifiable start among LQR, zero and injected gains");

    std::mt19937_64 rng(opts.seed);
    const Matrix base = starts.front();
    const double sigma = 0.5 * std::max(1.0, base.norm() / std::sqrt(static_cast<double>(base.size())));
    for (int tries = 0; static_cast<int>(starts.size()) < opts.multistarts && tries < 400; ++tries) {
        Matrix K = base;
        for (Eigen::Index i = 0; i < K.size(); ++i) K.data()[i] += sigma * gaussian(rng);
        const Candidate c = assess(sys, replay, K, kappa, gamma);
        if (c.certified) {
            starts.push_back(K);
            out.trace.push_back({K, c.J});
        }
    }

    double jmax = 0.0;
    for (const auto& e : out.trace) jmax = std::max(jmax, std::abs(e.J));
    const NmContext proto{&sys, &replay, kappa, gamma, du, dx, 10.0 * (1.0 + jmax), nullptr};
    const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : 200 * static_cast<int>(du * dx);

    std::vector<std::vector<TraceEntry>> results(starts.size());
    const int jobs = std::max(1, opts.jobs);
    for (std::size_t first = 0; first < starts.size(); first += static_cast<std::size_t>(jobs)) {
        std::vector<std::thread> pool;
        const std::size_t last = std::min(starts.size(), first + static_cast<std::size_t>(jobs));
        for (std::size_t i = first; i < last; ++i)
            pool.emplace_back([&, i] { results[i] = nelder_mead(proto, starts[i], max_iter); });
        for (auto& th : pool) th.join();
    }
    for (const auto& r : results) out.trace.insert(out.trace.end(), r.begin(), r.end());

    const auto best = std::min_element(out.trace.begin(), out.trace.end(), better);
    out.K_star = best->K;
    out.J_star = best->J;
    const PolicyEvaluation ev = evaluate_policy(replay, out.K_star);
    out.S_star = ev.S;
    out.certificate = *certify(sys, out.K_star, replay.h(), kappa, gamma).cert;
    return out;
}

std::pair<Matrix, double> best_of(const SystemDynamics& sys, const SampledReplay& replay, double kappa,
                                  double gamma, const std::vector<Matrix>& candidates) {
    std::optional<TraceEntry> best;
    for (const auto& K : candidates) {
        const Candidate c = assess(sys, replay, K, kappa, gamma);
        if (!c.certified) continue;
        TraceEntry e{K, c.J};
        if (!best || better(e, *best)) best = e;
    }
    if (!best) throw EmptyClass("best_of: no certified candidate");
    return {best->K, best->J};
}

DacParams comparator_params(const Matrix& K, const Matrix& K_star, const SystemDynamics& sys, const DacClass& cls) {
    if (K.rows() != K_star.rows() || K.cols() != K_star.cols() || K.rows() != sys.action_dim() ||
        K.cols() != sys.state_dim())
        throw ContractViolation("comparator_params: gain shape mismatch");
    const auto dx = sys.state_dim();
    const Matrix Qs = Matrix::Identity(dx, dx) + cls.h * (sys.A() - sys.B() * K_star);
    std::vector<Matrix> blocks;
    blocks.reserve(static_cast<std::size_t>(cls.l));
    Matrix left = cls.h * (K - K_star);
    for (int i = 1; i <= cls.l; ++i) {
        const double nb = spectral_norm(left);
        if (nb > cls.bound(i)) throw ComparatorOutOfClass(i, nb, cls.bound(i));
        blocks.push_back(left);
        left = left * Qs;
    }
    return DacParams(std::move(blocks), cls);
}

ComparatorGap comparator_gap(const SystemDynamics& sys, const CostFn& cost, const Matrix& K, const Matrix& K_star,
                             const DacClass& cls, const DisturbanceHistory& hist, long n) {
    const DacParams Mstar = comparator_params(K, K_star, sys, cls);
    const Matrix Mrev = Mstar.reversed_stack();
    const Matrix Q = closed_loop_matrix(sys, K, cls.h);
    const Matrix Qs = closed_loop_matrix(sys, K_star, cls.h);
    ComparatorGap out;
    Vector x = Vector::Zero(sys.state_dim());
    Vector xs = x;
    for (long t = 0; t < n; ++t) {
        const Vector z = Mrev * hist.segment(t - cls.l, cls.l);
        const Vector u = -K * x + z;
        const Vector us = -K_star * xs;
        const double tt = static_cast<double>(t) * cls.h;
        const double d = std::abs(cost.value(tt, x, u) - cost.value(tt, xs, us));
        out.gap += d;
        out.max_gap = std::max(out.max_gap, d);
        out.D = std::max({out.D, x.norm(), u.norm(), xs.norm(), us.norm()});
        out.W0 = std::max(out.W0, hist.at(t).norm());
        x = Q * x + cls.h * (hist.at(t) + sys.B() * z);
        xs = Qs * xs + cls.h * hist.at(t);
    }
    return out;
}

}  // namespace nsc

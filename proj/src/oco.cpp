#include "nsc/oco.hpp"

#include <cmath>
#include <limits>

namespace nsc {

Matrix closed_loop_matrix(const SystemDynamics& sys, const Matrix& K, double h) {
    const auto n = sys.state_dim();
    return Matrix::Identity(n, n) + h * (sys.A() - sys.B() * K);
}

PsiCoefficients psi_table(const Matrix& K, const SystemDynamics& sys, double h, const std::vector<DacParams>& by_lag,
                          int i_max) {
    if (by_lag.empty()) throw ContractViolation("psi_table: need at least one parameter set");
    const int l = by_lag.front().l();
    if (by_lag.size() != 1 && static_cast<int>(by_lag.size()) != l + 1)
        throw ContractViolation("psi_table: by_lag must hold 1 or l + 1 parameter sets");
    const Matrix Q = closed_loop_matrix(sys, K, h);
    const auto powers = matrix_powers(Q, std::max(i_max, l) + 1);
    const auto n = sys.state_dim();
    auto params = [&](int j) -> const DacParams& { return by_lag.size() == 1 ? by_lag.front() : by_lag[j]; };

    // Q^j B precomputed once.
    std::vector<Matrix> QjB;
    for (int j = 0; j <= l; ++j) QjB.push_back(powers[j] * sys.B());

    PsiCoefficients out;
    out.psi.reserve(static_cast<std::size_t>(i_max) + 1);
    for (int i = 0; i <= i_max; ++i) {
        Matrix psi = i <= l ? powers[i] : Matrix::Zero(n, n);
        for (int j = std::max(0, i - l); j <= std::min(l, i - 1); ++j) psi += QjB[j] * params(j).block(i - j);
        out.psi.push_back(std::move(psi));
    }
    return out;
}

double psi_bound(double a, int l, double h, double kappa_B, double kappa, double decay, int i) {
    return a * (l * h * kappa_B + 1.0) * kappa * kappa * std::pow(decay, i - 1);
}

// ---------------------------------------------------------------------------

DisturbanceHistory::DisturbanceHistory(int d_x, long pad, long reserve) : d_x_(d_x), pad_(pad) {
    if (d_x < 1 || pad < 0) throw ContractViolation("disturbance history: bad shape");
    data_.assign(static_cast<std::size_t>(pad * d_x), 0.0);
    data_.reserve(static_cast<std::size_t>((pad + reserve) * d_x));
}

void DisturbanceHistory::push(const Vector& w_hat) {
    if (w_hat.size() != d_x_) throw ContractViolation("disturbance history: dimension mismatch");
    data_.insert(data_.end(), w_hat.data(), w_hat.data() + d_x_);
    ++count_;
}

Eigen::Map<const Vector> DisturbanceHistory::at(long s) const {
    if (s < -pad_ || s >= count_) throw ContractViolation("disturbance history: index out of range");
    return Eigen::Map<const Vector>(data_.data() + (s + pad_) * d_x_, d_x_);
}

Eigen::Map<const Matrix> DisturbanceHistory::columns(long s0, long len) const {
    if (s0 < -pad_ || s0 + len > count_) throw ContractViolation("disturbance history: columns out of range");
    return Eigen::Map<const Matrix>(data_.data() + (s0 + pad_) * d_x_, d_x_, len);
}

DisturbanceHistory::Windows DisturbanceHistory::windows(long s0, long len, long count) const {
    if (s0 < -pad_ || s0 + len + count - 1 > count_ || count < 1)
        throw ContractViolation("disturbance history: windows out of range");
    return Windows(data_.data() + (s0 + pad_) * d_x_, len * d_x_, count, Eigen::OuterStride<>(d_x_));
}

Eigen::Map<const Vector> DisturbanceHistory::segment(long s0, long len) const {
    if (s0 < -pad_ || s0 + len > count_) throw ContractViolation("disturbance history: segment out of range");
    return Eigen::Map<const Vector>(data_.data() + (s0 + pad_) * d_x_, len * d_x_);
}

// ---------------------------------------------------------------------------

const DacParams& IdealWindow::params_at(long s) const {
    if (slow.empty()) throw ContractViolation("ideal window: no parameters");
    const long j = (s >= 0 ? s / m : -((-s + m - 1) / m)) - (k - H - 1);
    const long idx = std::clamp<long>(j, 0, static_cast<long>(slow.size()) - 1);
    return slow[static_cast<std::size_t>(idx)];
}

IdealStateAction ideal_state_action(const IdealWindow& win, long t) {
    const int l = win.l();
    const auto& hist = *win.history;
    std::vector<DacParams> by_lag;
    by_lag.reserve(static_cast<std::size_t>(l) + 1);
    for (int j = 0; j <= l; ++j) by_lag.push_back(win.params_at(t - 1 - j));
    const PsiCoefficients psi = psi_table(win.K, *win.sys, win.h, by_lag, 2 * l);

    Vector y = Vector::Zero(win.sys->state_dim());
    for (int i = 0; i <= 2 * l; ++i) y += psi.psi[i] * hist.at(t - 1 - i);
    y *= win.h;

    const DacParams& Mk = win.params_at(t);
    Vector v = -win.K * y;
    for (int j = 1; j <= l; ++j) v += Mk.block(j) * hist.at(t - j);
    return {y, v};
}

double ideal_cost(const IdealWindow& win, const CostFn& cost, long n, double last_weight) {
    double f = 0.0;
    const long t0 = win.k * win.m;
    const long t1 = std::min<long>(t0 + win.m, n);
    for (long t = t0; t < t1; ++t) {
        const auto [y, v] = ideal_state_action(win, t);
        const double w = (t == n - 1) ? last_weight : 1.0;
        f += w * cost.value(static_cast<double>(t) * win.h, y, v);
    }
    return f;
}

// ---------------------------------------------------------------------------

IdealObjective::IdealObjective(const SystemDynamics& sys, const Matrix& K, double h, const CostFn& cost, int l)
    : sys_(sys), K_(K), h_(h), cost_(cost), l_(l) {
    if (l < 1) throw ContractViolation("ideal objective: l must be >= 1");
    Q_ = closed_loop_matrix(sys, K, h);
    Ql1_ = matrix_powers(Q_, l + 2).back();
}

namespace {

void cost_gradients(const CostFn& cost, double t, const Vector& x, const Vector& u, Vector& gx, Vector& gu) {
    if (cost.has_gradients()) {
        gx = cost.grad_x(t, x, u);
        gu = cost.grad_u(t, x, u);
        return;
    }
    gx.resize(x.size());
    gu.resize(u.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = 1e-4 * std::max(1.0, std::abs(x(i)));
        Vector xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        gx(i) = (cost.value(t, xp, u) - cost.value(t, xm, u)) / (2.0 * step);
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double step = 1e-4 * std::max(1.0, std::abs(u(i)));
        Vector up = u, um = u;
        up(i) += step;
        um(i) -= step;
        gu(i) = (cost.value(t, x, up) - cost.value(t, x, um)) / (2.0 * step);
    }
}

}  // namespace

void IdealObjective::rollout(const DacParams& M, const DisturbanceHistory& hist, long t_begin, long t_end, Matrix& Y,
                             Matrix& V) const {
    if (M.l() != l_) throw ContractViolation("ideal objective: parameter length != l");
    if (hist.pad() < 2L * l_ + 1) throw ContractViolation("ideal objective: history pad must be >= 2l + 1");
    const int dx = sys_.state_dim();
    const int du = sys_.action_dim();
    const long lo = t_begin - 1 - l_;
    const long count = t_end - lo;  // z_s for s in [lo, t_end - 1]
    Matrix Z(du, count);
    Z.noalias() = M.reversed_stack() * hist.windows(lo - l_, l_, count);
    // e_s = w_hat_s + B z_s for s in [lo, t_end - 2]
    Matrix E = hist.columns(lo, count - 1);
    E.noalias() += sys_.B() * Z.leftCols(count - 1);

    const long range = t_end - t_begin;
    Y.resize(dx, range);
    Vector acc = Vector::Zero(dx), next(dx);
    for (long s = lo; s < t_begin; ++s) {
        next.noalias() = Q_ * acc;
        acc = next + h_ * E.col(s - lo);
    }
    for (long t = t_begin; t < t_end; ++t) {
        Y.col(t - t_begin) = acc;
        if (t + 1 < t_end) {
            next.noalias() = Q_ * acc;
            next.noalias() -= h_ * (Ql1_ * E.col(t - 1 - l_ - lo));
            acc = next + h_ * E.col(t - lo);
        }
    }
    V = Z.rightCols(range);
    V.noalias() -= K_ * Y;
}

void IdealObjective::trajectory(const DacParams& M, const DisturbanceHistory& hist, long t_begin, long t_end,
                                std::vector<Vector>& y, std::vector<Vector>& v) const {
    y.clear();
    v.clear();
    if (t_end <= t_begin) {
        if (M.l() != l_) throw ContractViolation("ideal objective: parameter length != l");
        return;
    }
    Matrix Y, V;
    rollout(M, hist, t_begin, t_end, Y, V);
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
        y.emplace_back(Y.col(c));
        v.emplace_back(V.col(c));
    }
}

IdealObjective::Result IdealObjective::evaluate(const DacParams& M, const DisturbanceHistory& hist, long t_begin,
                                                long t_end, long n, double last_weight, bool want_grad) const {
    Result res;
    res.fd_fallback = !cost_.has_gradients();
    const int dx = sys_.state_dim();
    const int du = sys_.action_dim();
    if (t_end <= t_begin) {
        if (M.l() != l_) throw ContractViolation("ideal objective: parameter length != l");
        if (want_grad) res.grad.assign(static_cast<std::size_t>(l_), Matrix::Zero(du, dx));
        return res;
    }
    Matrix Y, V;
    rollout(M, hist, t_begin, t_end, Y, V);
    auto weight = [&](long t) { return t == n - 1 ? last_weight : 1.0; };
    const long range = t_end - t_begin;

    Vector y(dx), u(du), gx, gu;
    Matrix Lam(dx, range), Gv(du, range);
    for (long t = t_begin; t < t_end; ++t) {
        const long idx = t - t_begin;
        y = Y.col(idx);
        u = V.col(idx);
        const double tt = static_cast<double>(t) * h_;
        res.value += weight(t) * cost_.value(tt, y, u);
        if (!want_grad) continue;
        cost_gradients(cost_, tt, y, u, gx, gu);
        const double w = weight(t);
        Lam.col(idx) = w * (gx - K_.transpose() * gu);
        Gv.col(idx) = w * gu;
    }
    if (!want_grad) return res;

    const Matrix Qt = Q_.transpose();
    const Matrix Ql1t = Ql1_.transpose();
    const Matrix Bt = sys_.B().transpose();
    const long lo = t_begin - 1 - l_;
    const long count = t_end - lo;
    Matrix Rho(du, count);
    Vector mu = Vector::Zero(dx), next(dx);  // mu_{t_end - 1} = 0
    for (long s = t_end - 1; s >= lo; --s) {
        if (s < t_end - 1) {
            next.noalias() = Qt * mu;
            if (s + 1 >= t_begin) next.noalias() += h_ * Lam.col(s + 1 - t_begin);
            const long j = s + l_ + 2;
            if (j >= t_begin && j < t_end) next.noalias() -= h_ * (Ql1t * Lam.col(j - t_begin));
            mu = next;
        }
        Rho.col(s - lo).noalias() = Bt * mu;
        if (s >= t_begin) Rho.col(s - lo) += Gv.col(s - t_begin);
    }
    Matrix grad_rev(du, static_cast<Eigen::Index>(l_) * dx);
    grad_rev.noalias() = Rho * hist.windows(lo - l_, l_, count).transpose();
    res.grad.assign(static_cast<std::size_t>(l_), Matrix());
    for (int i = 1; i <= l_; ++i)
        res.grad[static_cast<std::size_t>(i - 1)] = grad_rev.middleCols(static_cast<Eigen::Index>(l_ - i) * dx, dx);
    return res;
}

DacParams ogdm_step(const DacParams& M, const std::vector<Matrix>& grad, double eta) {
    if (!(eta >= 0.0)) throw ContractViolation("ogdm_step: eta must be nonnegative");
    if (static_cast<int>(grad.size()) != M.l()) throw ContractViolation("ogdm_step: gradient layout mismatch");
    std::vector<Matrix> raw;
    raw.reserve(grad.size());
    for (int i = 1; i <= M.l(); ++i) {
        const auto& g = grad[static_cast<std::size_t>(i - 1)];
        if (!g.allFinite()) throw Error("ogdm_step: non-finite gradient");
        raw.push_back(M.block(i) - eta * g);
    }
    return project(raw, M.cls());
}

// ---------------------------------------------------------------------------

namespace {

using Blocks = std::vector<Matrix>;

double inner(const Blocks& a, const Blocks& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
    return s;
}

Blocks combine(const Blocks& a, double alpha, const Blocks& b, double beta) {
    Blocks out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + beta * b[i];
    return out;
}

}  // namespace

MinimizeResult minimize_ideal(const IdealObjective& obj, const DisturbanceHistory& hist, long n, double last_weight,
                              const DacClass& cls, const std::vector<DacParams>& starts, double tol, int max_iter) {
    if (starts.empty()) throw ContractViolation("minimize_ideal: need a start point");
    auto value = [&](const DacParams& M) { return obj.evaluate(M, hist, 0, n, n, last_weight, false).value; };

    std::size_t best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const double f = value(starts[i]);
        if (f < fbest) {
            fbest = f;
            best = i;
        }
    }
    DacParams x = starts[best];
    double fx = fbest;
    DacParams y = x;
    double t = 1.0;
    double step = 1.0;
    MinimizeResult out{x, fx, 0, 0.0, false};

    for (int it = 0; it < max_iter; ++it) {
        const auto gy = obj.evaluate(y, hist, 0, n, n, last_weight, true);
        DacParams xn = y;
        double fxn = 0.0;
        for (int bt = 0; bt < 80; ++bt) {
            xn = project(combine(y.blocks(), 1.0, gy.grad, -step), cls);
            fxn = value(xn);
            const Blocks d = combine(xn.blocks(), 1.0, y.blocks(), -1.0);
            if (fxn <= gy.value + inner(gy.grad, d) + inner(d, d) / (2.0 * step) + 1e-15 * std::abs(gy.value)) break;
            step *= 0.5;
        }
        if (fxn > fx) {
            // Adaptive restart: momentum made things worse, retry from x.
            if (t == 1.0) {
                out.iterations = it + 1;
                out.converged = true;
                break;
            }
            y = x;
            t = 1.0;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = DacParams(combine(xn.blocks(), 1.0 + (t - 1.0) / tn, x.blocks(), -(t - 1.0) / tn), cls);
        const double rel = std::abs(fx - fxn) / std::max(1.0, std::abs(fxn));
        x = xn;
        fx = fxn;
        t = tn;
        step *= 1.25;
        out.iterations = it + 1;
        out.last_rel_change = rel;
        if (rel <= tol) {
            out.converged = true;
            break;
        }
    }
    out.M = x;
    out.value = fx;
    return out;
}

}  // namespace nsc

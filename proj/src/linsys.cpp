#include "nsc/linsys.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace nsc {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vector unit_vector(int dim, int axis) {
    Vector v = Vector::Zero(dim);
    v(axis) = 1.0;
    return v;
}

}  // namespace

SystemDynamics::SystemDynamics(Matrix A, Matrix B, double kappa_A, double kappa_B)
    : A_(std::move(A)), B_(std::move(B)), kappa_A_(kappa_A), kappa_B_(kappa_B) {
    if (A_.rows() < 1 || A_.rows() != A_.cols()) throw ContractViolation("system: A must be square, d_x >= 1");
    if (B_.rows() != A_.rows() || B_.cols() < 1) throw ContractViolation("system: B must be d_x x d_u, d_u >= 1");
    if (!A_.allFinite() || !B_.allFinite()) throw ContractViolation("system: non-finite entries");
    if (!(kappa_A_ >= 0.0) || !(kappa_B_ >= 0.0)) throw ContractViolation("system: kappa bounds must be nonnegative");
    const double na = spectral_norm(A_);
    const double nb = spectral_norm(B_);
    if (na > kappa_A_ * (1.0 + 1e-12))
        throw ContractViolation("system: ||A|| = " + std::to_string(na) + " exceeds kappa_A");
    if (nb > kappa_B_ * (1.0 + 1e-12))
        throw ContractViolation("system: ||B|| = " + std::to_string(nb) + " exceeds kappa_B");
}

SystemDynamics SystemDynamics::with_tight_bounds(Matrix A, Matrix B) {
    const double na = spectral_norm(A);
    const double nb = spectral_norm(B);
    return SystemDynamics(std::move(A), std::move(B), na, nb);
}

// ---------------------------------------------------------------------------
// Disturbances

DisturbanceSignal DisturbanceSignal::zero(int dim) {
    if (dim < 1) throw ContractViolation("disturbance: dim must be >= 1");
    DisturbanceSignal s;
    s.kind_ = Kind::Zero;
    s.dim_ = dim;
    s.level_ = Vector::Zero(dim);
    return s;
}

DisturbanceSignal DisturbanceSignal::constant(Vector c, double W) {
    if (c.size() < 1 || !c.allFinite() || !(W >= 0.0)) throw ContractViolation("disturbance: bad constant");
    DisturbanceSignal s;
    s.kind_ = Kind::Constant;
    s.dim_ = static_cast<int>(c.size());
    s.W_ = W;
    const double n = c.stableNorm();
    s.level_ = n > W ? Vector(c * (W / n)) : c;
    return s;
}

DisturbanceSignal DisturbanceSignal::sinusoid(int dim, Tone tone, double W, std::uint64_t seed) {
    DisturbanceSignal s = sum_of_sinusoids(dim, {std::move(tone)}, W, seed);
    s.kind_ = Kind::Sinusoid;
    return s;
}

DisturbanceSignal DisturbanceSignal::sum_of_sinusoids(int dim, std::vector<Tone> tones, double W,
                                                      std::uint64_t seed) {
    if (dim < 1 || !(W >= 0.0)) throw ContractViolation("disturbance: bad dimension or bound");
    DisturbanceSignal s;
    s.kind_ = Kind::SumOfSinusoids;
    s.dim_ = dim;
    s.W_ = W;
    s.seed_ = seed;
    s.level_ = Vector::Zero(dim);

    std::mt19937_64 rng(seed);
    double amp_sum = 0.0;
    double rate_sum = 0.0;
    for (auto& t : tones) {
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.omega) || t.omega < 0.0)
            throw ContractViolation("disturbance: tone amplitude/frequency must be finite, omega >= 0");
        // Draw in a fixed order so missing fields do not shift later draws.
        const double drawn_phase = 2.0 * std::numbers::pi * uniform01(rng);
        Vector drawn_dir(dim);
        for (int i = 0; i < dim; ++i) drawn_dir(i) = 2.0 * uniform01(rng) - 1.0;
        Vector dir = t.direction ? *t.direction : drawn_dir;
        if (dir.size() != dim) throw ContractViolation("disturbance: direction dimension mismatch");
        if (!(dir.stableNorm() > 0.0)) dir = unit_vector(dim, 0);
        dir /= dir.stableNorm();
        s.tones_.push_back({t.amplitude, t.omega, t.phase.value_or(drawn_phase), dir});
        amp_sum += std::abs(t.amplitude);
        rate_sum += std::abs(t.amplitude) * t.omega;
    }
    double scale = 1.0;
    if (amp_sum > W) scale = std::min(scale, W / amp_sum);
    if (rate_sum > W) scale = std::min(scale, W / rate_sum);
    for (auto& t : s.tones_) t.amplitude *= scale;
    return s;
}

DisturbanceSignal DisturbanceSignal::smooth_ramp(Vector level, double tau, double W) {
    if (level.size() < 1 || !level.allFinite() || !(tau > 0.0) || !(W >= 0.0))
        throw ContractViolation("disturbance: bad ramp parameters");
    DisturbanceSignal s;
    s.kind_ = Kind::SmoothRamp;
    s.dim_ = static_cast<int>(level.size());
    s.W_ = W;
    s.tau_ = tau;
    // ||w|| <= ||level||, ||w'|| <= ||level|| / tau.
    const double cap = std::min(W, W * tau);
    const double n = level.stableNorm();
    s.level_ = n > cap ? Vector(level * (cap / n)) : level;
    return s;
}

DisturbanceSample DisturbanceSignal::eval(double t) const {
    DisturbanceSample out{Vector::Zero(dim_), Vector::Zero(dim_)};
    switch (kind_) {
        case Kind::Zero:
            break;
        case Kind::Constant:
            out.w = level_;
            break;
        case Kind::Sinusoid:
        case Kind::SumOfSinusoids:
            for (const auto& tone : tones_) {
                const double arg = tone.omega * t + tone.phase;
                out.w += tone.amplitude * std::sin(arg) * tone.direction;
                out.wdot += tone.amplitude * tone.omega * std::cos(arg) * tone.direction;
            }
            break;
        case Kind::SmoothRamp: {
            const double th = std::tanh(t / tau_);
            out.w = th * level_;
            out.wdot = ((1.0 - th * th) / tau_) * level_;
            break;
        }
    }
    return out;
}

Vector DisturbanceSignal::value(double t) const {
    if (kind_ == Kind::Sinusoid || kind_ == Kind::SumOfSinusoids) {
        Vector w = Vector::Zero(dim_);
        for (const auto& tone : tones_) w += tone.amplitude * std::sin(tone.omega * t + tone.phase) * tone.direction;
        return w;
    }
    return eval(t).w;
}

std::uint64_t DisturbanceSignal::fingerprint() const {
    Fnv1a f;
    const int k = static_cast<int>(kind_);
    f.update(&k, sizeof k);
    f.update(&dim_, sizeof dim_);
    f.update(W_);
    f.update(&seed_, sizeof seed_);
    f.update(level_);
    f.update(tau_);
    for (const auto& t : tones_) {
        f.update(t.amplitude);
        f.update(t.omega);
        f.update(t.phase);
        f.update(t.direction);
    }
    return f.digest();
}

// ---------------------------------------------------------------------------
// Integration

IntegrationDivergence::IntegrationDivergence(double time)
    : Error("integration diverged (non-finite state) at t = " + std::to_string(time)), time_(time) {}

TrajectorySegment integrate_step(const SystemDynamics& sys, const DisturbanceSignal& dist, double t0,
                                 const Vector& x0, const Vector& u, double h, int substeps) {
    if (!(h > 0.0)) throw ContractViolation("integrate_step: h must be positive");
    if (substeps < 1) throw ContractViolation("integrate_step: substeps must be >= 1");
    if (x0.size() != sys.state_dim() || u.size() != sys.action_dim() || dist.dim() != sys.state_dim())
        throw ContractViolation("integrate_step: dimension mismatch");

    const Matrix& A = sys.A();
    const Vector bu = sys.B() * u;
    const double dt = h / substeps;

    TrajectorySegment seg;
    seg.t0 = t0;
    seg.h = h;
    seg.x0 = x0;
    seg.u = u;
    seg.times.reserve(static_cast<std::size_t>(substeps) + 1);
    seg.substates.reserve(static_cast<std::size_t>(substeps) + 1);
    seg.times.push_back(t0);
    seg.substates.push_back(x0);

    Vector x = x0;
    for (int j = 0; j < substeps; ++j) {
        const double t = t0 + j * dt;
        const Vector w0 = dist.value(t);
        const Vector wm = dist.value(t + 0.5 * dt);
        const Vector w1 = dist.value(t + dt);
        const Vector k1 = A * x + bu + w0;
        const Vector k2 = A * (x + 0.5 * dt * k1) + bu + wm;
        const Vector k3 = A * (x + 0.5 * dt * k2) + bu + wm;
        const Vector k4 = A * (x + dt * k3) + bu + w1;
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) throw IntegrationDivergence(t + dt);
        seg.times.push_back(j + 1 == substeps ? t0 + h : t + dt);
        seg.substates.push_back(x);
    }
    seg.x1 = x;
    return seg;
}

std::vector<double> simpson_weights(int panels, double width) {
    if (panels < 2) throw QuadratureResolutionError("Simpson quadrature needs at least 2 substeps");
    std::vector<double> w(static_cast<std::size_t>(panels) + 1, 0.0);
    const int simpson_panels = (panels % 2 == 0) ? panels : panels - 3;
    for (int j = 0; j < simpson_panels; j += 2) {
        w[j] += width / 3.0;
        w[j + 1] += 4.0 * width / 3.0;
        w[j + 2] += width / 3.0;
    }
    if (simpson_panels != panels) {
        const int j = simpson_panels;
        w[j] += 3.0 * width / 8.0;
        w[j + 1] += 9.0 * width / 8.0;
        w[j + 2] += 9.0 * width / 8.0;
        w[j + 3] += 3.0 * width / 8.0;
    }
    return w;
}

double cost_integral(const TrajectorySegment& segment, const CostFn& cost) {
    const int panels = static_cast<int>(segment.substates.size()) - 1;
    if (panels < 2) throw QuadratureResolutionError("cost_integral: fewer than 2 substeps recorded");
    const auto w = simpson_weights(panels, segment.h / panels);
    double sum = 0.0;
    for (int j = 0; j <= panels; ++j) sum += w[j] * cost.value(segment.times[j], segment.substates[j], segment.u);
    return sum;
}

long sample_count(double T, double h) {
    if (!(T > 0.0) || !(h > 0.0)) throw ContractViolation("sample_count: T and h must be positive");
    return static_cast<long>(std::ceil(T / h - 1e-9));
}

// ---------------------------------------------------------------------------
// Replay

namespace {

struct AffineRk4 {
    std::vector<Matrix> Phi;    // per substep state map
    std::vector<Matrix> Gamma;  // per substep input map
};

AffineRk4 affine_substeps(const Matrix& A, const Matrix& B, double length, int substeps) {
    const double dt = length / substeps;
    const auto n = A.rows();
    AffineRk4 out;
    Matrix X = Matrix::Identity(n, n);
    Matrix G = Matrix::Zero(n, B.cols());
    out.Phi.push_back(X);
    out.Gamma.push_back(G);
    for (int j = 0; j < substeps; ++j) {
        const Matrix k1 = A * X;
        const Matrix k2 = A * (X + 0.5 * dt * k1);
        const Matrix k3 = A * (X + 0.5 * dt * k2);
        const Matrix k4 = A * (X + dt * k3);
        X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const Matrix g1 = A * G + B;
        const Matrix g2 = A * (G + 0.5 * dt * g1) + B;
        const Matrix g3 = A * (G + 0.5 * dt * g2) + B;
        const Matrix g4 = A * (G + dt * g3) + B;
        G += (dt / 6.0) * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
        out.Phi.push_back(X);
        out.Gamma.push_back(G);
    }
    return out;
}

}  // namespace

SampledReplay::SampledReplay(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                             double T, double h, int substeps)
    : T_(T), h_(h), substeps_(substeps), dx_(sys.state_dim()) {
    if (substeps < 2) throw QuadratureResolutionError("replay: substeps must be >= 2 for quadrature");
    if (dist.dim() != sys.state_dim() || cost.state_dim() != sys.state_dim() ||
        cost.action_dim() != sys.action_dim())
        throw ContractViolation("replay: dimension mismatch");

    const long n = sample_count(T, h);
    const int dx = sys.state_dim();
    const int du = sys.action_dim();
    const Matrix& A = sys.A();

    auto build = [&](double length, std::vector<Matrix>& E) {
        const AffineRk4 rk = affine_substeps(A, sys.B(), length, substeps);
        const auto w = simpson_weights(substeps, length / substeps);
        Propagator p{length, rk.Phi.back(), rk.Gamma.back(), Matrix::Zero(dx + du, dx + du)};
        E.clear();
        for (int j = 0; j <= substeps; ++j) {
            Matrix e(dx, dx + du);
            e << rk.Phi[j], rk.Gamma[j];
            p.S += w[j] * e.transpose() * cost.Q() * e;
            E.push_back(std::move(e));
        }
        p.S.bottomRightCorner(du, du) += length * cost.R();
        return p;
    };

    std::vector<Matrix> E_full, E_last;
    full_ = build(h, E_full);
    const double last_len = T - static_cast<double>(n - 1) * h;
    if (std::abs(last_len - h) > 1e-12 * h) last_ = build(last_len, E_last);

    Qc_ = cost.Q();
    Rc_ = cost.R();
    q_.resize(static_cast<std::size_t>(n));
    c0_.resize(static_cast<std::size_t>(n));
    d_.resize(static_cast<std::size_t>(n));
    s_.resize(static_cast<std::size_t>(n));
    k_.resize(static_cast<std::size_t>(n));
    Fnv1a fp;
    fp.update(T);
    fp.update(h);
    fp.update(&substeps, sizeof substeps);
    for (long r = 0; r < n; ++r) {
        const double len = interval_length(r);
        const auto& E = (last_ && r == n - 1) ? E_last : E_full;
        const auto w = simpson_weights(substeps, len / substeps);
        const double dt = len / substeps;
        const double t0 = static_cast<double>(r) * h;

        Vector x = Vector::Zero(dx);
        Vector s = Vector::Zero(dx + du);
        double k = 0.0;
        auto accumulate = [&](int j, double t) {
            const QuadraticForm f = cost.form(t);
            s += w[j] * E[j].transpose() * (f.Q * x + f.q);
            k += w[j] * (x.dot(f.Q * x) + 2.0 * f.q.dot(x) + f.c0);
        };
        {
            const QuadraticForm f0 = cost.form(t0);
            q_[r] = f0.q;
            c0_[r] = f0.c0;
        }
        accumulate(0, t0);
        for (int j = 0; j < substeps; ++j) {
            const double t = t0 + j * dt;
            const Vector w0 = dist.value(t);
            const Vector wm = dist.value(t + 0.5 * dt);
            const Vector w1 = dist.value(t + dt);
            const Vector k1 = A * x + w0;
            const Vector k2 = A * (x + 0.5 * dt * k1) + wm;
            const Vector k3 = A * (x + 0.5 * dt * k2) + wm;
            const Vector k4 = A * (x + dt * k3) + w1;
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!x.allFinite()) throw IntegrationDivergence(t + dt);
            accumulate(j + 1, j + 1 == substeps ? t0 + len : t + dt);
        }
        d_[r] = x;
        s_[r] = s;
        k_[r] = k;
        fp.update(x);
        fp.update(s);
        fp.update(k);
    }
    hash_ = fp.digest();
}

double SampledReplay::interval_length(long r) const {
    if (last_ && r == intervals() - 1) return last_->length;
    return h_;
}

const SampledReplay::Propagator& SampledReplay::prop(long r) const {
    if (last_ && r == intervals() - 1) return *last_;
    return full_;
}

const Matrix& SampledReplay::S(long r) const { return prop(r).S; }

double SampledReplay::sample_cost(long r, const Vector& x, const Vector& u) const {
    const auto i = static_cast<std::size_t>(r);
    return x.dot(Qc_ * x) + u.dot(Rc_ * u) + 2.0 * q_[i].dot(x) + c0_[i];
}

const Matrix& SampledReplay::Phi(long r) const { return prop(r).Phi; }
const Matrix& SampledReplay::Gamma(long r) const { return prop(r).Gamma; }

Vector SampledReplay::step(long r, const Vector& x, const Vector& u) const {
    const Propagator& p = prop(r);
    return p.Phi * x + p.Gamma * u + d_[static_cast<std::size_t>(r)];
}

double SampledReplay::interval_cost(long r, const Vector& x, const Vector& u) const {
    const Propagator& p = prop(r);
    Vector z(x.size() + u.size());
    z << x, u;
    return z.dot(p.S * z) + 2.0 * s_[static_cast<std::size_t>(r)].dot(z) + k_[static_cast<std::size_t>(r)];
}

}  // namespace nsc

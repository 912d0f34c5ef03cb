#pragma once

#include "nsc/cost.hpp"
#include "nsc/linalg.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nsc {

/// Continuous-time dynamics x' = A x + B u + w with declared norm bounds.
class SystemDynamics {
public:
    /// Throws ContractViolation if dimensions are inconsistent, entries are
    /// non-finite, or ||A|| > kappa_A, ||B|| > kappa_B.
    SystemDynamics(Matrix A, Matrix B, double kappa_A, double kappa_B);

    /// Uses the exact spectral norms as the bounds.
    static SystemDynamics with_tight_bounds(Matrix A, Matrix B);

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    double kappa_A() const { return kappa_A_; }
    double kappa_B() const { return kappa_B_; }
    int state_dim() const { return static_cast<int>(A_.rows()); }
    int action_dim() const { return static_cast<int>(B_.cols()); }

private:
    Matrix A_;
    Matrix B_;
    double kappa_A_;
    double kappa_B_;
};

struct DisturbanceSample {
    Vector w;
    Vector wdot;
};

/// Pre-committed smooth disturbance. Amplitudes are rescaled at construction
/// so that ||w(t)|| <= W and ||w'(t)|| <= W hold for every t.
class DisturbanceSignal {
public:
    enum class Kind { Zero, Constant, Sinusoid, SumOfSinusoids, SmoothRamp };

    /// One sinusoidal component. Missing phase/direction are drawn from the seed.
    struct Tone {
        double amplitude = 0.0;
        double omega = 0.0;
        std::optional<double> phase;
        std::optional<Vector> direction;
    };

    static DisturbanceSignal zero(int dim);
    static DisturbanceSignal constant(Vector c, double W);
    static DisturbanceSignal sinusoid(int dim, Tone tone, double W, std::uint64_t seed = 0);
    static DisturbanceSignal sum_of_sinusoids(int dim, std::vector<Tone> tones, double W,
                                              std::uint64_t seed);
    /// level * tanh(t / tau).
    static DisturbanceSignal smooth_ramp(Vector level, double tau, double W);

    DisturbanceSample eval(double t) const;
    Vector value(double t) const;

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double bound() const { return W_; }
    std::uint64_t seed() const { return seed_; }
    /// Identifies (kind, resolved params, seed); equal fingerprints replay identically.
    std::uint64_t fingerprint() const;

    /// Resolved components after seeding and scaling (empty for non-tonal kinds).
    struct ResolvedTone {
        double amplitude;
        double omega;
        double phase;
        Vector direction;
    };
    const std::vector<ResolvedTone>& tones() const { return tones_; }

private:
    DisturbanceSignal() = default;

    Kind kind_ = Kind::Zero;
    int dim_ = 0;
    double W_ = 0.0;
    std::uint64_t seed_ = 0;
    Vector level_;
    double tau_ = 1.0;
    std::vector<ResolvedTone> tones_;
};

/// Thrown when the integrator produces a non-finite state.
class IntegrationDivergence : public Error {
public:
    IntegrationDivergence(double time);
    double time() const { return time_; }

private:
    double time_;
};

class QuadratureResolutionError : public Error {
public:
    using Error::Error;
};

struct TrajectorySegment {
    double t0 = 0.0;
    double h = 0.0;
    Vector x0;
    Vector u;
    Vector x1;
    std::vector<double> times;    ///< substep times including both endpoints
    std::vector<Vector> substates;  ///< states at `times`
};

/// Classical RK4 over `substeps` uniform substeps of x' = Ax + Bu + w(t) with u held.
TrajectorySegment integrate_step(const SystemDynamics& sys, const DisturbanceSignal& dist, double t0,
                                 const Vector& x0, const Vector& u, double h, int substeps);

/// Composite Simpson quadrature of c_t(x_t, u) over the segment (3/8 rule on
/// the last three panels when the panel count is odd).
double cost_integral(const TrajectorySegment& segment, const CostFn& cost);

/// Quadrature weights for `panels` uniform panels of width `width`.
std::vector<double> simpson_weights(int panels, double width);

/// Number of sample intervals covering [0, T] with interval h (ceil, tolerant to rounding).
long sample_count(double T, double h);

/// Exact affine form of the RK4 sampled-data map on a fixed horizon:
///
///   x_{r+1} = Phi_r x_r + Gamma_r u_r + d_r
///   int_r c dt = z' S_r z + 2 s_r' z + k_r,     z = (x_r, u_r)
///
/// where the disturbance enters only through d_r, s_r and k_r. This lets
/// policy evaluations on a fixed disturbance replay skip re-integration.
class SampledReplay {
public:
    SampledReplay(const SystemDynamics& sys, const DisturbanceSignal& dist, const CostFn& cost,
                  double T, double h, int substeps);

    long intervals() const { return static_cast<long>(d_.size()); }
    double h() const { return h_; }
    double horizon() const { return T_; }
    int substeps() const { return substeps_; }
    double interval_length(long r) const;
    double interval_start(long r) const { return static_cast<double>(r) * h_; }

    const Matrix& Phi(long r) const;
    const Matrix& Gamma(long r) const;
    const Vector& d(long r) const { return d_[static_cast<std::size_t>(r)]; }

    /// Interval cost as z'S z + 2 s'z + k with z = (x, u).
    const Matrix& S(long r) const;
    const Vector& s(long r) const { return s_[static_cast<std::size_t>(r)]; }
    double k(long r) const { return k_[static_cast<std::size_t>(r)]; }

    Vector step(long r, const Vector& x, const Vector& u) const;
    double interval_cost(long r, const Vector& x, const Vector& u) const;
    /// c_t(x, u) at the sample time t = r h.
    double sample_cost(long r, const Vector& x, const Vector& u) const;
    const Matrix& cost_Q() const { return Qc_; }
    const Matrix& cost_R() const { return Rc_; }
    /// Linear term and constant of the cost at the sample time.
    const Vector& sample_q(long r) const { return q_[static_cast<std::size_t>(r)]; }
    double sample_c0(long r) const { return c0_[static_cast<std::size_t>(r)]; }

    /// Fingerprint of the disturbance and cost tables; equal hashes mean equal replays.
    std::uint64_t hash() const { return hash_; }

private:
    struct Propagator {
        double length;
        Matrix Phi;
        Matrix Gamma;
        Matrix S;
    };
    const Propagator& prop(long r) const;

    double T_;
    double h_;
    int substeps_;
    int dx_;
    Propagator full_;
    std::optional<Propagator> last_;
    std::vector<Vector> d_;
    std::vector<Vector> s_;
    std::vector<double> k_;
    Matrix Qc_;
    Matrix Rc_;
    std::vector<Vector> q_;
    std::vector<double> c0_;
    std::uint64_t hash_ = 0;
};

}  // namespace nsc

#pragma once

#include "nsc/linalg.hpp"

#include <vector>

namespace nsc {

/// Constants of the bounded-domain regularity assumption: on ||x||,||u|| <= D,
/// |c| <= beta D^2, gradient norms <= G D and |c_t1 - c_t2| <= L |t1 - t2| D^2.
struct CostConstants {
    double beta = 0.0;
    double G = 0.0;
    double L = 0.0;
};

/// r(t) = offset + sum_k amplitude_k sin(omega_k t + phase_k) direction_k.
struct ReferenceSignal {
    struct Component {
        double amplitude = 0.0;
        double omega = 0.0;
        double phase = 0.0;
        Vector direction;
    };
    Vector offset;
    std::vector<Component> components;

    Vector value(double t) const;
    Vector derivative(double t) const;
    double max_norm() const;
    double max_derivative_norm() const;
};

/// Cost c_t(x, u) = x'Qx + u'Ru + 2 q_t'x + c0_t, the common shape of both kinds.
struct QuadraticForm {
    Matrix Q;
    Matrix R;
    Vector q;
    double c0 = 0.0;
};

/// Convex stage cost with analytic gradients.
///
/// Quadratic:          c(x, u)   = x'Qx + u'Ru
/// TrackingQuadratic:  c_t(x, u) = (x - r(t))'Q(x - r(t)) + u'Ru
///
/// Construction verifies Q, R are PSD and that the analytic gradients agree
/// with central differences on a fixed set of points.
class CostFn {
public:
    enum class Kind { Quadratic, TrackingQuadratic };

    static CostFn quadratic(Matrix Q, Matrix R);
    static CostFn quadratic(Matrix Q, Matrix R, CostConstants declared);
    static CostFn tracking(Matrix Q, Matrix R, ReferenceSignal reference);
    static CostFn tracking(Matrix Q, Matrix R, ReferenceSignal reference, CostConstants declared);

    Kind kind() const { return kind_; }
    int state_dim() const { return static_cast<int>(Q_.rows()); }
    int action_dim() const { return static_cast<int>(R_.rows()); }
    const CostConstants& constants() const { return constants_; }
    const Matrix& Q() const { return Q_; }
    const Matrix& R() const { return R_; }
    const ReferenceSignal& reference() const { return reference_; }

    double value(double t, const Vector& x, const Vector& u) const;
    Vector grad_x(double t, const Vector& x, const Vector& u) const;
    Vector grad_u(double t, const Vector& x, const Vector& u) const;

    /// False for a copy produced by without_gradients(); callers must then
    /// fall back to finite differences.
    bool has_gradients() const { return analytic_gradients_; }
    CostFn without_gradients() const;

    QuadraticForm form(double t) const;
    bool time_invariant() const { return kind_ == Kind::Quadratic; }

private:
    CostFn() = default;
    void validate();
    static CostConstants default_constants(Kind kind, const Matrix& Q, const Matrix& R,
                                           const ReferenceSignal& ref);

    Kind kind_ = Kind::Quadratic;
    Matrix Q_;
    Matrix R_;
    ReferenceSignal reference_;
    CostConstants constants_;
    bool analytic_gradients_ = true;
};

}  // namespace nsc

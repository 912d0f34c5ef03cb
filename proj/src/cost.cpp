#include "nsc/cost.hpp"

#include <cmath>
#include <random>

namespace nsc {

Vector ReferenceSignal::value(double t) const {
    Vector r = offset;
    for (const auto& c : components) r += c.amplitude * std::sin(c.omega * t + c.phase) * c.direction;
    return r;
}

Vector ReferenceSignal::derivative(double t) const {
    Vector r = Vector::Zero(offset.size());
    for (const auto& c : components)
        r += c.amplitude * c.omega * std::cos(c.omega * t + c.phase) * c.direction;
    return r;
}

double ReferenceSignal::max_norm() const {
    double s = offset.norm();
    for (const auto& c : components) s += std::abs(c.amplitude) * c.direction.norm();
    return s;
}

double ReferenceSignal::max_derivative_norm() const {
    double s = 0.0;
    for (const auto& c : components) s += std::abs(c.amplitude * c.omega) * c.direction.norm();
    return s;
}

CostConstants CostFn::default_constants(Kind kind, const Matrix& Q, const Matrix& R,
                                        const ReferenceSignal& ref) {
    const double nq = spectral_norm(Q);
    const double nr = spectral_norm(R);
    if (kind == Kind::Quadratic) return {nq + nr, 2.0 * std::max(nq, nr), 0.0};
    // Valid on any domain with D >= max(1, sup ||r||).
    return {4.0 * nq + nr, std::max(4.0 * nq, 2.0 * nr), 4.0 * nq * ref.max_derivative_norm()};
}

CostFn CostFn::quadratic(Matrix Q, Matrix R) {
    CostFn c;
    c.kind_ = Kind::Quadratic;
    c.Q_ = std::move(Q);
    c.R_ = std::move(R);
    c.reference_.offset = Vector::Zero(c.Q_.rows());
    c.validate();
    c.constants_ = default_constants(c.kind_, c.Q_, c.R_, c.reference_);
    return c;
}

CostFn CostFn::quadratic(Matrix Q, Matrix R, CostConstants declared) {
    CostFn c = quadratic(std::move(Q), std::move(R));
    c.constants_ = declared;
    return c;
}

CostFn CostFn::tracking(Matrix Q, Matrix R, ReferenceSignal reference) {
    CostFn c;
    c.kind_ = Kind::TrackingQuadratic;
    c.Q_ = std::move(Q);
    c.R_ = std::move(R);
    c.reference_ = std::move(reference);
    if (c.reference_.offset.size() == 0) c.reference_.offset = Vector::Zero(c.Q_.rows());
    c.validate();
    c.constants_ = default_constants(c.kind_, c.Q_, c.R_, c.reference_);
    return c;
}

CostFn CostFn::tracking(Matrix Q, Matrix R, ReferenceSignal reference, CostConstants declared) {
    CostFn c = tracking(std::move(Q), std::move(R), std::move(reference));
    c.constants_ = declared;
    return c;
}

CostFn CostFn::without_gradients() const {
    CostFn c = *this;
    c.analytic_gradients_ = false;
    return c;
}

void CostFn::validate() {
    if (Q_.rows() != Q_.cols() || R_.rows() != R_.cols() || Q_.rows() == 0 || R_.rows() == 0)
        throw ContractViolation("cost: Q and R must be non-empty square matrices");
    if (!Q_.allFinite() || !R_.allFinite()) throw ContractViolation("cost: non-finite weights");
    const double tol = 1e-12;
    if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > tol * (1.0 + Q_.cwiseAbs().maxCoeff()) ||
        (R_ - R_.transpose()).cwiseAbs().maxCoeff() > tol * (1.0 + R_.cwiseAbs().maxCoeff()))
        throw ContractViolation("cost: Q and R must be symmetric");
    if (min_symmetric_eigenvalue(Q_) < -1e-12 || min_symmetric_eigenvalue(R_) < -1e-12)
        throw ContractViolation("cost: Q and R must be positive semidefinite (convexity)");
    if (reference_.offset.size() != Q_.rows())
        throw ContractViolation("cost: reference dimension mismatch");
    for (const auto& comp : reference_.components)
        if (comp.direction.size() != Q_.rows())
            throw ContractViolation("cost: reference direction dimension mismatch");

    // Central-difference consistency check of the analytic gradients.
    std::mt19937_64 rng(0x5eedc057ULL);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    const double step = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        const double t = 10.0 * (unit() + 1.0);
        Vector x(Q_.rows()), u(R_.rows());
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = unit();
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = unit();
        const Vector gx = grad_x(t, x, u);
        const Vector gu = grad_u(t, x, u);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Vector xp = x, xm = x;
            xp(i) += step;
            xm(i) -= step;
            const double fd = (value(t, xp, u) - value(t, xm, u)) / (2.0 * step);
            if (std::abs(fd - gx(i)) > 1e-6 * (1.0 + std::abs(gx(i))))
                throw ContractViolation("cost: analytic x-gradient disagrees with finite differences");
        }
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            Vector up = u, um = u;
            up(i) += step;
            um(i) -= step;
            const double fd = (value(t, x, up) - value(t, x, um)) / (2.0 * step);
            if (std::abs(fd - gu(i)) > 1e-6 * (1.0 + std::abs(gu(i))))
                throw ContractViolation("cost: analytic u-gradient disagrees with finite differences");
        }
    }
}

double CostFn::value(double t, const Vector& x, const Vector& u) const {
    if (kind_ == Kind::Quadratic) return x.dot(Q_ * x) + u.dot(R_ * u);
    const Vector e = x - reference_.value(t);
    return e.dot(Q_ * e) + u.dot(R_ * u);
}

Vector CostFn::grad_x(double t, const Vector& x, const Vector&) const {
    if (kind_ == Kind::Quadratic) return 2.0 * (Q_ * x);
    return 2.0 * (Q_ * (x - reference_.value(t)));
}

Vector CostFn::grad_u(double, const Vector&, const Vector& u) const { return 2.0 * (R_ * u); }

QuadraticForm CostFn::form(double t) const {
    QuadraticForm f{Q_, R_, Vector::Zero(Q_.rows()), 0.0};
    if (kind_ == Kind::TrackingQuadratic) {
        const Vector r = reference_.value(t);
        f.q = -(Q_ * r);
        f.c0 = r.dot(Q_ * r);
    }
    return f;
}

}  // namespace nsc

#include "nsc/dac.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace nsc {

double DacClass::bound(int i) const { return a * h * std::pow(decay, i - 1); }

DacClass DacClass::make(double kappa, double gamma, double h, int l, DecayBase base, double a) {
    if (!(h > 0.0) || l < 1) throw ContractViolation("dac class: need h > 0 and l >= 1");
    DacClass c;
    c.a = a > 0.0 ? a : 2.0 * kappa * kappa * kappa;
    c.h = h;
    c.decay = base == DecayBase::OneMinusHGamma ? 1.0 - h * gamma : 1.0 - gamma;
    c.l = l;
    if (!(c.decay > 0.0) || c.decay > 1.0)
        throw ContractViolation("dac class: decay base must lie in (0, 1], got " + std::to_string(c.decay));
    return c;
}

DacParams::DacParams(std::vector<Matrix> blocks, DacClass cls) : blocks_(std::move(blocks)), cls_(cls) {
    if (blocks_.empty()) throw ContractViolation("dac params: need at least one block");
    if (static_cast<int>(blocks_.size()) != cls_.l)
        throw ContractViolation("dac params: block count " + std::to_string(blocks_.size()) + " != l = " +
                                std::to_string(cls_.l));
    d_u_ = static_cast<int>(blocks_.front().rows());
    d_x_ = static_cast<int>(blocks_.front().cols());
    for (const auto& b : blocks_)
        if (b.rows() != d_u_ || b.cols() != d_x_) throw ContractViolation("dac params: inconsistent block shapes");
}

DacParams DacParams::zero(const DacClass& cls, int d_u, int d_x) {
    return DacParams(std::vector<Matrix>(static_cast<std::size_t>(cls.l), Matrix::Zero(d_u, d_x)), cls);
}

double DacParams::class_ratio() const {
    double worst = 0.0;
    for (int i = 1; i <= l(); ++i) worst = std::max(worst, spectral_norm(block(i)) / cls_.bound(i));
    return worst;
}

std::vector<double> DacParams::to_flat() const {
    std::vector<double> out;
    out.reserve(3 + static_cast<std::size_t>(l() * d_u_ * d_x_));
    out.push_back(l());
    out.push_back(d_u_);
    out.push_back(d_x_);
    for (const auto& b : blocks_)
        for (int r = 0; r < d_u_; ++r)
            for (int c = 0; c < d_x_; ++c) out.push_back(b(r, c));
    return out;
}

DacParams DacParams::from_flat(const std::vector<double>& flat, const DacClass& cls) {
    if (flat.size() < 3) throw ContractViolation("dac params: flat array too short");
    const int l = static_cast<int>(flat[0]);
    const int du = static_cast<int>(flat[1]);
    const int dx = static_cast<int>(flat[2]);
    if (l < 1 || du < 1 || dx < 1 || flat.size() != 3 + static_cast<std::size_t>(l) * du * dx)
        throw ContractViolation("dac params: flat header inconsistent with payload size");
    std::vector<Matrix> blocks;
    std::size_t k = 3;
    for (int i = 0; i < l; ++i) {
        Matrix b(du, dx);
        for (int r = 0; r < du; ++r)
            for (int c = 0; c < dx; ++c) b(r, c) = flat[k++];
        blocks.push_back(std::move(b));
    }
    DacClass c = cls;
    c.l = l;
    return DacParams(std::move(blocks), c);
}

std::uint64_t DacParams::hash() const {
    Fnv1a f;
    for (const auto& b : blocks_) f.update(b);
    return f.digest();
}

Matrix DacParams::reversed_stack() const {
    Matrix s(d_u_, static_cast<Eigen::Index>(l()) * d_x_);
    for (int i = 1; i <= l(); ++i) s.middleCols(static_cast<Eigen::Index>(l() - i) * d_x_, d_x_) = block(i);
    return s;
}

NoiseBuffer::NoiseBuffer(int d_x, int capacity) : d_x_(d_x), capacity_(capacity) {
    if (d_x < 1 || capacity < 1) throw ContractViolation("noise buffer: d_x and capacity must be >= 1");
}

void NoiseBuffer::push(const Vector& w_hat) {
    if (w_hat.size() != d_x_) throw ContractViolation("noise buffer: dimension mismatch");
    entries_.push_front(w_hat);
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_back();
    ++count_;
    W0_ = std::max(W0_, w_hat.norm());
}

Vector NoiseBuffer::lag(int i) const {
    if (i < 1) throw ContractViolation("noise buffer: lag must be >= 1");
    if (i > static_cast<int>(entries_.size())) {
        if (i <= count_) throw ContractViolation("noise buffer: lag beyond capacity");
        return Vector::Zero(d_x_);
    }
    return entries_[static_cast<std::size_t>(i - 1)];
}

Vector estimate_disturbance(const SystemDynamics& sys, const Vector& x_r, const Vector& u_r, const Vector& x_next,
                            double h) {
    if (!(h > 0.0)) throw ContractViolation("estimate_disturbance: h must be positive");
    return (x_next - x_r - h * (sys.A() * x_r + sys.B() * u_r)) / h;
}

Vector dac_action(const Matrix& K, const Vector& x_r, const DacParams& params, const NoiseBuffer& buf) {
    if (K.cols() != x_r.size() || K.rows() != params.action_dim() || params.state_dim() != x_r.size())
        throw ContractViolation("dac_action: dimension mismatch");
    Vector u = -K * x_r;
    for (int i = 1; i <= params.l(); ++i) {
        if (i > buf.count()) break;
        u += params.block(i) * buf.lag(i);
    }
    return u;
}

Matrix radial_scale_block(const Matrix& block, double bound) {
    const double n = spectral_norm(block);
    if (n <= bound) return block;
    return block * (bound / n);
}

Matrix project_block(const Matrix& block, double bound) {
    if (spectral_norm(block) <= bound) return block;
    Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = svd.singularValues();
    const double cap = bound * (1.0 - 1e-13);
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::min(s(i), cap);
    Matrix out = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    // Guard against rounding in the reconstruction.
    const double n = spectral_norm(out);
    if (n > bound) out *= cap / n;
    return out;
}

DacParams project(const std::vector<Matrix>& raw, const DacClass& cls) {
    if (static_cast<int>(raw.size()) != cls.l) throw ContractViolation("project: block count != l");
    std::vector<Matrix> out;
    out.reserve(raw.size());
    for (int i = 1; i <= cls.l; ++i) out.push_back(project_block(raw[static_cast<std::size_t>(i - 1)], cls.bound(i)));
    return DacParams(std::move(out), cls);
}

}  // namespace nsc

#pragma once

#include "nsc/linalg.hpp"
#include "nsc/linsys.hpp"

#include <deque>
#include <vector>

namespace nsc {

enum class DecayBase { OneMinusHGamma, OneMinusGamma };

/// The decaying-norm class ||M^i|| <= a h decay^{i-1}, i = 1..l.
struct DacClass {
    double a = 0.0;
    double h = 0.0;
    double decay = 1.0;
    int l = 0;

    double bound(int i) const;

    /// a = 2 kappa^3 unless given; decay = 1 - h gamma or 1 - gamma.
    static DacClass make(double kappa, double gamma, double h, int l, DecayBase base = DecayBase::OneMinusHGamma,
                         double a = 0.0);
};

/// Ordered blocks M^1 .. M^l (d_u x d_x), h-absorbed: u = -K x + sum_i M^i w_hat_{r-i}.
class DacParams {
public:
    DacParams() = default;
    DacParams(std::vector<Matrix> blocks, DacClass cls);

    static DacParams zero(const DacClass& cls, int d_u, int d_x);

    const std::vector<Matrix>& blocks() const { return blocks_; }
    const Matrix& block(int i) const { return blocks_[static_cast<std::size_t>(i - 1)]; }  ///< 1-based
    const DacClass& cls() const { return cls_; }
    int l() const { return static_cast<int>(blocks_.size()); }
    int action_dim() const { return d_u_; }
    int state_dim() const { return d_x_; }

    /// Largest ||M^i|| / bound(i); <= 1 means in class.
    double class_ratio() const;
    bool in_class() const { return class_ratio() <= 1.0; }

    /// Flat layout [l, d_u, d_x, row-major M^1, ..., row-major M^l].
    std::vector<double> to_flat() const;
    static DacParams from_flat(const std::vector<double>& flat, const DacClass& cls);

    std::uint64_t hash() const;

    /// Blocks packed side by side in reverse order: [M^l ... M^1], d_u x (l d_x).
    /// Multiplying by the contiguous history (w_{r-l}, ..., w_{r-1}) gives sum_i M^i w_{r-i}.
    Matrix reversed_stack() const;

private:
    std::vector<Matrix> blocks_;
    DacClass cls_;
    int d_u_ = 0;
    int d_x_ = 0;
};

/// History of disturbance estimates. Index i >= 1 reads w_hat_{r-i} where r is
/// the number of pushed entries; unavailable history reads as zero.
class NoiseBuffer {
public:
    NoiseBuffer(int d_x, int capacity);

    void push(const Vector& w_hat);
    /// w_hat_{r-i}, i >= 1.
    Vector lag(int i) const;
    long count() const { return count_; }
    int capacity() const { return capacity_; }
    /// Running max of ||w_hat|| over everything pushed.
    double W0() const { return W0_; }

private:
    int d_x_;
    int capacity_;
    long count_ = 0;
    double W0_ = 0.0;
    std::deque<Vector> entries_;  ///< front = most recent
};

/// w_hat_r = (x_next - x_r - h(A x_r + B u_r)) / h.
Vector estimate_disturbance(const SystemDynamics& sys, const Vector& x_r, const Vector& u_r, const Vector& x_next,
                            double h);

/// u = -K x_r + sum_{i=1}^{l} M^i w_hat_{r-i}.
Vector dac_action(const Matrix& K, const Vector& x_r, const DacParams& params, const NoiseBuffer& buf);

/// Euclidean projection onto the class, block by block, by clipping singular
/// values at the block bound. Blocks already inside are returned unchanged;
/// clipped blocks land strictly inside (by a 1e-13 relative margin) so a
/// second projection is the identity.
DacParams project(const std::vector<Matrix>& raw, const DacClass& cls);

/// Single-block version of `project`.
Matrix project_block(const Matrix& block, double bound);

/// Radial rescaling of a block onto the spectral ball (not the Euclidean projection in general).
Matrix radial_scale_block(const Matrix& block, double bound);

}  // namespace nsc

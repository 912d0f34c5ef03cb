#pragma once

#include "nsc/cost.hpp"
#include "nsc/dac.hpp"
#include "nsc/linalg.hpp"
#include "nsc/linsys.hpp"

#include <vector>

namespace nsc {

/// Q_h = I + h(A - BK).
Matrix closed_loop_matrix(const SystemDynamics& sys, const Matrix& K, double h);

/// Psi_{t,i}, i = 0..i_max, for one sample t.
struct PsiCoefficients {
    std::vector<Matrix> psi;
};

/// Psi_{t,i} = Q^i 1{i<=l} + sum_{j=0}^{l} Q^j B M_{t-j}^{i-j} 1{i-j in [1,l]}.
/// `by_lag[j]` holds the parameters active at sample t - j (j = 0..l); a single
/// entry means the same parameters at every lag.
PsiCoefficients psi_table(const Matrix& K, const SystemDynamics& sys, double h, const std::vector<DacParams>& by_lag,
                          int i_max);

/// a (l h kappa_B + 1) kappa^2 decay^{i-1}.
double psi_bound(double a, int l, double h, double kappa_B, double kappa, double decay, int i);

/// Estimates w_hat_s for s = 0..count-1, stored contiguously behind `pad` zero
/// columns so that reads at negative indices (down to -pad) return zero.
class DisturbanceHistory {
public:
    DisturbanceHistory(int d_x, long pad, long reserve = 0);

    void push(const Vector& w_hat);
    long count() const { return count_; }
    long pad() const { return pad_; }
    int dim() const { return d_x_; }

    /// w_hat_s; zero for s < 0. Requires -pad <= s < count.
    Eigen::Map<const Vector> at(long s) const;
    /// Contiguous (w_hat_{s0}, ..., w_hat_{s0+len-1}) stacked, length len * d_x.
    Eigen::Map<const Vector> segment(long s0, long len) const;
    /// Same range as a d_x x len matrix.
    Eigen::Map<const Matrix> columns(long s0, long len) const;
    /// Overlapping view whose column c is segment(s0 + c, len); (len d_x) x count.
    using Windows = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;
    Windows windows(long s0, long len, long count) const;

private:
    int d_x_;
    long pad_;
    long count_ = 0;
    std::vector<double> data_;
};

/// Counterfactual state/action under a window of slow-scale parameters,
/// assuming the state l samples before the start of each sum was zero.
struct IdealWindow {
    const SystemDynamics* sys = nullptr;
    Matrix K;
    double h = 0.0;
    int m = 1;
    int H = 1;
    long k = 0;  ///< slow index of the interval the window serves
    /// Slow parameters M~_{k-H-1} .. M~_k (H + 2 entries; the oldest covers the
    /// samples just before the interval's memory reaches back).
    std::vector<DacParams> slow;
    const DisturbanceHistory* history = nullptr;

    int l() const { return H * m; }
    /// Parameters active at sample s (clamped to the window).
    const DacParams& params_at(long s) const;
};

struct IdealStateAction {
    Vector y;
    Vector v;
};

/// y_t = h sum_{i=0}^{2l} Psi_{t-1,i} w_hat_{t-1-i},  v_t = -K y_t + sum_j M_k^j w_hat_{t-j}.
IdealStateAction ideal_state_action(const IdealWindow& win, long t);

/// f_k = sum over t in [km, (k+1)m) ∩ [0, n) of weight_t c_t(y_t, v_t), weights 1 except
/// `last_weight` on sample n - 1 (partial final interval).
double ideal_cost(const IdealWindow& win, const CostFn& cost, long n, double last_weight = 1.0);

/// Value and gradient of sum_t weight_t c_t(y_t(M), v_t(M)) over a sample range with
/// all window slots set to the same M. Evaluated with sliding recursions: O((range + l) l) work.
class IdealObjective {
public:
    IdealObjective(const SystemDynamics& sys, const Matrix& K, double h, const CostFn& cost, int l);

    struct Result {
        double value = 0.0;
        std::vector<Matrix> grad;  ///< same block layout as DacParams
        bool fd_fallback = false;  ///< cost lacked analytic gradients
    };

    /// Range [t_begin, t_end); history must reach t_end - 2 and have pad >= 2l + 1.
    /// `last_weight` applies to sample `n - 1` if it lies in the range.
    Result evaluate(const DacParams& M, const DisturbanceHistory& hist, long t_begin, long t_end, long n,
                    double last_weight, bool want_grad) const;

    /// Ideal state/action sequence y_t, v_t for t in the range.
    void trajectory(const DacParams& M, const DisturbanceHistory& hist, long t_begin, long t_end,
                    std::vector<Vector>& y, std::vector<Vector>& v) const;

    const Matrix& Q() const { return Q_; }
    int l() const { return l_; }

private:
    void rollout(const DacParams& M, const DisturbanceHistory& hist, long t_begin, long t_end, Matrix& Y,
                 Matrix& V) const;

    const SystemDynamics& sys_;
    Matrix K_;
    double h_;
    const CostFn& cost_;
    int l_;
    Matrix Q_;
    Matrix Ql1_;  ///< Q^{l+1}
};

/// project(M - eta * grad).
DacParams ogdm_step(const DacParams& M, const std::vector<Matrix>& grad, double eta);

struct MinimizeResult {
    DacParams M;
    double value = 0.0;
    int iterations = 0;
    double last_rel_change = 0.0;
    bool converged = false;
};

/// Projected accelerated gradient (FISTA with backtracking and adaptive restart)
/// on the full-horizon ideal cost over the class; starts from the best of `starts`.
MinimizeResult minimize_ideal(const IdealObjective& obj, const DisturbanceHistory& hist, long n, double last_weight,
                              const DacClass& cls, const std::vector<DacParams>& starts, double tol = 1e-8,
                              int max_iter = 2000);

}  // namespace nsc

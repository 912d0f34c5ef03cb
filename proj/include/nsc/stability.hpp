#pragma once

#include "nsc/linalg.hpp"
#include "nsc/linsys.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nsc {

/// A gain K with a (kappa, gamma) strong-stability certificate:
/// I + h(A - BK) = P L_h P^{-1}, ||L_h|| <= 1 - h gamma, ||K||, ||P||, ||P^{-1}|| <= kappa.
struct StablePolicyCert {
    Matrix K;
    double kappa = 1.0;
    double gamma = 0.0;
    Matrix P;
    Matrix Pinv;
    double h_max = 0.0;
    /// Sample intervals at which the contraction was checked (h, h/2, h/4).
    std::vector<double> verified_h;
    /// ||L_h|| at each verified interval.
    std::vector<double> Lh_norm;
    bool schur_fallback = false;
};

struct CertifyRefusal {
    std::string condition;
    double measured = 0.0;
    double limit = 0.0;
};

struct CertifyResult {
    std::optional<StablePolicyCert> cert;
    std::optional<CertifyRefusal> refusal;
    bool accepted() const { return cert.has_value(); }
};

/// No conditioning-acceptable similarity transform exists (defective, non-contracting closed loop).
class CertificationInfeasible : public Error {
public:
    using Error::Error;
};

class NotStronglyStable : public Error {
public:
    using Error::Error;
};

class SynthesisError : public Error {
public:
    using Error::Error;
};

/// Similarity transform bringing A - BK to (near) block-diagonal real form.
struct SimilarityTransform {
    Matrix P;
    Matrix Pinv;
    bool schur = false;
};

/// Builds P from the real eigenvector basis of A - BK, with a scaled real-Schur
/// fallback when the eigenvector matrix has condition number above 1e6. The
/// Schur scaling is chosen for interval `h`. P is balanced so ||P|| = ||P^{-1}||.
SimilarityTransform similarity_transform(const SystemDynamics& sys, const Matrix& K, double h);

/// ||P^{-1}(I + h(A - BK))P||.
double contraction_norm(const SystemDynamics& sys, const Matrix& K, const SimilarityTransform& st, double h);

/// Accepts iff ||K||, ||P||, ||P^{-1}|| <= kappa and ||L_h'|| <= 1 - h' gamma for
/// h' in {h, h/2, h/4}. Relative tolerance 1e-12 on each comparison.
CertifyResult certify(const SystemDynamics& sys, const Matrix& K, double h, double kappa, double gamma);

/// Smallest kappa on {1.25^j} and largest gamma on a 32-point linear grid accepted by certify.
std::pair<double, double> best_certificate(const SystemDynamics& sys, const Matrix& K, double h);

/// Continuous-time LQR gain by Newton-Kleinman iteration.
Matrix lqr_gain(const SystemDynamics& sys, const Matrix& Q, const Matrix& R);

/// Solves A'X + XA + C = 0 (C symmetric) via the Kronecker form.
Matrix solve_lyapunov(const Matrix& A, const Matrix& C);

/// Largest real part of the eigenvalues.
double spectral_abscissa(const Matrix& M);

}  // namespace nsc

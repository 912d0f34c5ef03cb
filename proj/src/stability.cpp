#include "nsc/stability.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace nsc {

namespace {

constexpr double kEigenCondLimit = 1e6;

bool within(double measured, double limit) { return measured <= limit + 1e-12 * std::max(1.0, std::abs(limit)); }

// Rotate the complex eigenvector a + ib by a phase so Re and Im are orthogonal,
// then scale the pair to unit RMS column norm. Both keep the real block form.
void normalize_pair(Eigen::Ref<Vector> a, Eigen::Ref<Vector> b) {
    const double theta = 0.5 * std::atan2(-2.0 * a.dot(b), a.squaredNorm() - b.squaredNorm());
    const double c = std::cos(theta), s = std::sin(theta);
    const Vector ra = c * a - s * b;
    const Vector rb = s * a + c * b;
    const double scale = std::sqrt(0.5 * (ra.squaredNorm() + rb.squaredNorm()));
    a = ra / scale;
    b = rb / scale;
}

// Real eigenvector basis; columns of complex pairs hold (Re v, Im v).
std::optional<SimilarityTransform> eigen_transform(const Matrix& M) {
    Eigen::EigenSolver<Matrix> es(M);
    if (es.info() != Eigen::Success) return std::nullopt;
    Matrix V = es.pseudoEigenvectors();
    const Matrix D = es.pseudoEigenvalueMatrix();
    const auto n = M.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i + 1 < n && D(i, i + 1) != 0.0) {
            normalize_pair(V.col(i), V.col(i + 1));
            ++i;
        } else {
            const double nv = V.col(i).norm();
            if (!(nv > 0.0)) return std::nullopt;
            V.col(i) /= nv;
        }
    }
    Eigen::FullPivLU<Matrix> lu(V);
    if (!lu.isInvertible()) return std::nullopt;
    const Matrix Vinv = lu.inverse();
    const double nv = spectral_norm(V);
    const double ni = spectral_norm(Vinv);
    if (!std::isfinite(nv * ni) || nv * ni > kEigenCondLimit) return std::nullopt;
    const double c = std::sqrt(ni / nv);
    return SimilarityTransform{c * V, Vinv / c, false};
}

SimilarityTransform schur_transform(const Matrix& M, double h) {
    const auto n = M.rows();
    const double abscissa = spectral_abscissa(M);
    if (!(abscissa < 0.0))
        throw CertificationInfeasible("closed loop is ill-conditioned or defective with spectral abscissa " +
                                      std::to_string(abscissa) + " >= 0; no contracting transform exists");

    Eigen::RealSchur<Matrix> rs(M);
    const Matrix& U = rs.matrixU();
    const Matrix& T = rs.matrixT();

    // Bring each 2x2 diagonal block to scaled-rotation form.
    Matrix S = Matrix::Identity(n, n);
    std::vector<int> block_of(static_cast<std::size_t>(n));
    int block = 0;
    for (Eigen::Index i = 0; i < n; ++i, ++block) {
        block_of[i] = block;
        if (i + 1 < n && T(i + 1, i) != 0.0) {
            block_of[i + 1] = block;
            const Matrix Tb = T.block(i, i, 2, 2);
            Eigen::EigenSolver<Matrix> es(Tb);
            Matrix Vb = es.pseudoEigenvectors();
            if (es.pseudoEigenvalueMatrix()(0, 1) != 0.0) normalize_pair(Vb.col(0), Vb.col(1));
            S.block(i, i, 2, 2) = Vb;
            ++i;
        }
    }
    const Matrix Sinv = S.inverse();
    const Matrix T1 = Sinv * T * S;

    const double target = 0.5 * (-abscissa);
    for (int j = 0; j <= 40; ++j) {
        const double delta = std::ldexp(1.0, -j);
        Vector d(n);
        for (Eigen::Index i = 0; i < n; ++i) d(i) = std::pow(delta, block_of[i]);
        const Matrix Td = d.cwiseInverse().asDiagonal() * T1 * d.asDiagonal();
        const Matrix L = Matrix::Identity(n, n) + h * Td;
        const double g = (1.0 - spectral_norm(L)) / h;
        if (g >= target) {
            Matrix P = U * S * d.asDiagonal();
            Matrix Pinv = d.cwiseInverse().asDiagonal() * Sinv * U.transpose();
            const double c = std::sqrt(spectral_norm(Pinv) / spectral_norm(P));
            return {c * P, Pinv / c, true};
        }
    }
    throw CertificationInfeasible("Schur scaling could not reach half of the spectral decay rate");
}

}  // namespace

double spectral_abscissa(const Matrix& M) {
    Eigen::EigenSolver<Matrix> es(M, false);
    return es.eigenvalues().real().maxCoeff();
}

SimilarityTransform similarity_transform(const SystemDynamics& sys, const Matrix& K, double h) {
    if (K.rows() != sys.action_dim() || K.cols() != sys.state_dim())
        throw ContractViolation("certify: K must be d_u x d_x");
    if (!(h > 0.0)) throw ContractViolation("certify: h must be positive");
    const Matrix M = sys.A() - sys.B() * K;
    if (auto st = eigen_transform(M)) return *st;
    return schur_transform(M, h);
}

double contraction_norm(const SystemDynamics& sys, const Matrix& K, const SimilarityTransform& st, double h) {
    const Matrix M = sys.A() - sys.B() * K;
    const Matrix L = st.Pinv * (Matrix::Identity(M.rows(), M.cols()) + h * M) * st.P;
    return spectral_norm(L);
}

CertifyResult certify(const SystemDynamics& sys, const Matrix& K, double h, double kappa, double gamma) {
    if (!(kappa >= 1.0)) throw ContractViolation("certify: kappa must be >= 1");
    if (!(gamma > 0.0)) throw ContractViolation("certify: gamma must be positive");
    const SimilarityTransform st = similarity_transform(sys, K, h);

    CertifyResult out;
    auto refuse = [&](std::string what, double measured, double limit) {
        out.refusal = CertifyRefusal{std::move(what), measured, limit};
        return out;
    };
    const double nk = spectral_norm(K);
    if (!within(nk, kappa)) return refuse("||K|| <= kappa", nk, kappa);
    const double np = spectral_norm(st.P);
    if (!within(np, kappa)) return refuse("||P|| <= kappa", np, kappa);
    const double npi = spectral_norm(st.Pinv);
    if (!within(npi, kappa)) return refuse("||P^-1|| <= kappa", npi, kappa);

    StablePolicyCert cert{K, kappa, gamma, st.P, st.Pinv, h, {}, {}, st.schur};
    for (double hh : {h, 0.5 * h, 0.25 * h}) {
        const double nl = contraction_norm(sys, K, st, hh);
        const double limit = 1.0 - hh * gamma;
        if (!within(nl, limit)) return refuse("||L_h|| <= 1 - h*gamma at h=" + std::to_string(hh), nl, limit);
        cert.verified_h.push_back(hh);
        cert.Lh_norm.push_back(nl);
    }
    out.cert = std::move(cert);
    return out;
}

std::pair<double, double> best_certificate(const SystemDynamics& sys, const Matrix& K, double h) {
    const SimilarityTransform st = similarity_transform(sys, K, h);
    const double need = std::max({spectral_norm(K), spectral_norm(st.P), spectral_norm(st.Pinv)});
    double kappa = 1.0;
    while (!within(need, kappa)) kappa *= 1.25;

    double gamma_bar = std::numeric_limits<double>::infinity();
    for (double hh : {h, 0.5 * h, 0.25 * h})
        gamma_bar = std::min(gamma_bar, (1.0 - contraction_norm(sys, K, st, hh)) / hh);
    if (!(gamma_bar > 0.0))
        throw NotStronglyStable("no contraction: best achievable gamma = " + std::to_string(gamma_bar));

    for (int j = 32; j >= 1; --j) {
        const double gamma = j * gamma_bar / 32.0;
        if (certify(sys, K, h, kappa, gamma).accepted()) return {kappa, gamma};
    }
    throw NotStronglyStable("empty (kappa, gamma) acceptance region");
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& C) {
    const auto n = A.rows();
    if (A.cols() != n || C.rows() != n || C.cols() != n) throw ContractViolation("lyapunov: dimension mismatch");
    // vec(A'X + XA) = (I kron A' + A' kron I) vec(X)
    const Matrix At = A.transpose();
    Matrix L = Matrix::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        L.block(i * n, i * n, n, n) += At;
        for (Eigen::Index j = 0; j < n; ++j) L.block(i * n, j * n, n, n).diagonal().array() += At(i, j);
    }
    const Vector rhs = -Eigen::Map<const Vector>(C.data(), n * n);
    Eigen::PartialPivLU<Matrix> lu(L);
    Vector x = lu.solve(rhs);
    Matrix X = Eigen::Map<Matrix>(x.data(), n, n);
    return 0.5 * (X + X.transpose());
}

Matrix lqr_gain(const SystemDynamics& sys, const Matrix& Q, const Matrix& R) {
    const Matrix& A = sys.A();
    const Matrix& B = sys.B();
    const auto n = A.rows();
    const auto du = B.cols();
    if (Q.rows() != n || Q.cols() != n || R.rows() != du || R.cols() != du)
        throw ContractViolation("lqr_gain: weight dimensions");
    if (min_symmetric_eigenvalue(Q) < -1e-12) throw ContractViolation("lqr_gain: Q must be PSD");
    Eigen::LLT<Matrix> rllt(R);
    if (rllt.info() != Eigen::Success || min_symmetric_eigenvalue(R) <= 0.0)
        throw ContractViolation("lqr_gain: R must be positive definite");
    const Matrix Rinv = rllt.solve(Matrix::Identity(du, du));
    const Matrix I = Matrix::Identity(n, n);

    Matrix K = Matrix::Zero(du, n);
    if (!(spectral_abscissa(A) < 0.0)) {
        // Bass: (A + bI)Z + Z(A + bI)' = 2BB', K0 = B'Z^{-1}.
        const double b = spectral_norm(A) + 1.0;
        const Matrix Z = solve_lyapunov(-(A + b * I).transpose(), 2.0 * B * B.transpose());
        Eigen::LLT<Matrix> zllt(Z);
        if (zllt.info() != Eigen::Success || min_symmetric_eigenvalue(Z) <= 1e-14 * spectral_norm(Z))
            throw SynthesisError("lqr_gain: pole-shift initialization failed, (A, B) not stabilizable");
        K = B.transpose() * zllt.solve(I);
    }

    Matrix X = Matrix::Zero(n, n);
    for (int it = 0; it < 200; ++it) {
        const Matrix Ac = A - B * K;
        if (!(spectral_abscissa(Ac) < 0.0))
            throw SynthesisError("lqr_gain: Newton-Kleinman iterate lost stability, (A, B) not stabilizable");
        X = solve_lyapunov(Ac, Q + K.transpose() * R * K);
        const Matrix Knext = Rinv * B.transpose() * X;
        const double step = (Knext - K).norm();
        K = Knext;
        if (step <= 1e-13 * std::max(1.0, K.norm())) break;
    }
    const Matrix res = A.transpose() * X + X * A - X * B * Rinv * B.transpose() * X + Q;
    const double rn = res.norm();
    if (!std::isfinite(rn) || rn > 1e-8 * std::max(1.0, X.norm()))
        throw SynthesisError("lqr_gain: Riccati residual " + std::to_string(rn) + " after 200 iterations");
    return K;
}

}  // namespace nsc

#include "nsc/linalg.hpp"

#include <cstdio>

namespace nsc {

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == 1 || m.cols() == 1) return m.norm();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

double min_symmetric_eigenvalue(const Matrix& m) {
    Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

std::vector<Matrix> matrix_powers(const Matrix& q, int count) {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count));
    if (count <= 0) return out;
    out.push_back(Matrix::Identity(q.rows(), q.cols()));
    for (int i = 1; i < count; ++i) out.push_back(q * out.back());
    return out;
}

void Fnv1a::update(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        state_ ^= p[i];
        state_ *= 0x100000001b3ULL;
    }
}

void Fnv1a::update(const Matrix& m) {
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    update(dims, sizeof dims);
    // Column-major storage is contiguous for MatrixXd.
    update(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw ContractViolation("matrix must be non-empty");
    const auto cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw ContractViolation("ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

}  // namespace nsc

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed inputs with inconsistent dimensions or violated a precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Largest singular value.
double spectral_norm(const Matrix& m);

bool all_finite(const Matrix& m);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_symmetric_eigenvalue(const Matrix& m);

/// Powers Q^0 .. Q^count-1 by repeated multiplication.
std::vector<Matrix> matrix_powers(const Matrix& q, int count);

/// 64-bit FNV-1a over raw bytes; used for replay and parameter fingerprints.
class Fnv1a {
public:
    void update(const void* data, std::size_t bytes);
    void update(double v) { update(&v, sizeof v); }
    void update(const Matrix& m);
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

/// Parse a matrix from nested rows; throws ContractViolation on ragged input.
Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows);

}  // namespace nsc

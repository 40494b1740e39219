#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cgauss/matrix.hpp"

namespace cgauss {

// Symmetric matrix A(m) with entries A_ij = a_i * delta_ij + a0 where every
// a_k > 0 (k = 0..m, a0 being the constant). The structure admits closed
// forms for the determinant, the inverse and linear solves, so everything
// here runs in O(m) time and memory. Values are immutable after
// construction and safe to share across threads.
class DiagPlusConstantMatrix {
public:
    // Throws NonPositiveEntry if a0 or any diagonal increment is zero,
    // negative, NaN or infinite, or if diag is empty.
    DiagPlusConstantMatrix(double a0, std::vector<double> diag);

    double a0() const noexcept { return a0_; }
    const std::vector<double>& diag() const noexcept { return diag_; }
    std::size_t dim() const noexcept { return diag_.size(); }

    // A_ij = a_i * delta_ij + a0 (indices 0-based into diag).
    double entry(std::size_t i, std::size_t j) const noexcept {
        return i == j ? diag_[i] + a0_ : a0_;
    }

    // O(m^2) materialization; intended for tests and CLI output, not for
    // production paths.
    Matrix dense() const;

    // log prod_{k=0}^m a_k
    double log_product() const noexcept { return log_pi_; }
    // s(m) = sum_{k=0}^m 1/a_k
    double recip_sum() const noexcept { return s_; }

private:
    double a0_;
    std::vector<double> diag_;
    double log_pi_;
    double s_;
};

// Inverse of a DiagPlusConstantMatrix. Entries follow the closed form
//   B_ij = delta_ij / a_i - (1/s) * (1/a_i) * (1/a_j)
// i.e. a diagonal matrix minus a rank-one term along the vector of
// reciprocals; inv_diag doubles as that rank-one direction.
struct StructuredInverse {
    std::vector<double> inv_diag;  // 1/a_i, i = 1..m
    double s = 0.0;                // sum_{k=0}^m 1/a_k, strictly positive

    std::size_t dim() const noexcept { return inv_diag.size(); }

    double entry(std::size_t i, std::size_t j) const noexcept {
        const double rank_one = -(inv_diag[i] * inv_diag[j]) / s;
        return i == j ? inv_diag[i] + rank_one : rank_one;
    }

    Matrix dense() const;
};

// True exactly when the candidate parameters satisfy the structure's
// hypothesis: a0 > 0 and every diagonal increment > 0 (finite). Positive
// definiteness then follows, the matrix being the sum of a positive
// diagonal matrix and a positive constant matrix.
bool is_positive_definite(double a0, std::span<const double> diag) noexcept;

// log |A| = log prod a_k + log sum 1/a_k, evaluated in log space so that
// large dimensions cannot overflow.
double log_determinant(const DiagPlusConstantMatrix& a);

// exp(log_determinant); may round to +inf when the determinant exceeds the
// double range.
double determinant(const DiagPlusConstantMatrix& a);

// Same value as log_determinant via the recursion
//   |A(m+1)| = a_{m+1} |A(m)| + prod_{k=0}^m a_k
// carried on a scaled (mantissa, exponent) pair so intermediates never
// overflow. Exists as an independent differential-testing path.
double log_determinant_recursive(const DiagPlusConstantMatrix& a);

StructuredInverse inverse(const DiagPlusConstantMatrix& a);

// Solves A x = b in O(m). Throws DimensionMismatch if b has the wrong size.
std::vector<double> solve(const DiagPlusConstantMatrix& a, std::span<const double> b);

}  // namespace cgauss

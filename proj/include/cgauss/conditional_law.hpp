#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cgauss/matrix.hpp"
#include "cgauss/structured_matrix.hpp"

namespace cgauss {

// Coordinate frame of a constraint-satisfying vector: X_i = w_i Z_i, so the
// constraint reads sum X_i = c in X-space and w'Z = c in Z-space.
enum class Space { X, Z };

const char* space_name(Space s) noexcept;

// Weight vector of the constraint w'Z = c. At least two coordinates, all
// nonzero and finite; the squared norm is accumulated once, left to right,
// and cached for reproducibility.
class WeightVector {
public:
    explicit WeightVector(std::vector<double> w);

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const noexcept { return w_[i]; }
    const std::vector<double>& values() const noexcept { return w_; }
    double norm_sq() const noexcept { return norm_sq_; }

private:
    std::vector<double> w_;
    double norm_sq_;
};

// A full n-dimensional point lying on the constraint hyperplane.
struct FullSpacePoint {
    std::vector<double> coords;
    Space space = Space::X;
};

// Mean/covariance pair for a (possibly degenerate) Gaussian law.
struct GaussianMoments {
    std::vector<double> mean;
    Matrix covariance;
};

// The exact (n-1)-dimensional Normal law of X = (w_1 Z_1, ..., w_n Z_n)
// given sum X_i = c, with one coordinate (the pivot) eliminated through the
// constraint. Mean and covariance are reported over the retained
// coordinates in their original order; the precision matrix keeps the
// diagonal-plus-constant structure
//   alpha_ii = 1/w_i^2 + 1/w_p^2,   alpha_ij = 1/w_p^2.
// Immutable after construction; all operations on it are pure.
class ConditionalGaussian {
public:
    const WeightVector& weights() const noexcept { return weights_; }
    double c() const noexcept { return c_; }

    // 0-based index of the eliminated coordinate.
    std::size_t pivot() const noexcept { return pivot_; }
    // Original 0-based indices of the retained coordinates, ascending.
    const std::vector<std::size_t>& retained() const noexcept { return retained_; }

    std::size_t dim() const noexcept { return mu_.size(); }  // n - 1
    const std::vector<double>& mean() const noexcept { return mu_; }
    const Matrix& covariance() const noexcept { return sigma_; }
    const DiagPlusConstantMatrix& precision() const noexcept { return precision_; }

    // log of K = 1 / sqrt((2 pi)^(n-1) |Sigma|) = sqrt(||w||^2) /
    // ((2 pi)^((n-1)/2) |prod w_i|).
    double log_norm_const() const noexcept { return log_norm_const_; }

private:
    friend ConditionalGaussian condition_on_weighted_sum(const WeightVector&, double,
                                                         std::optional<std::size_t>,
                                                         std::size_t);
    ConditionalGaussian(WeightVector weights, double c, std::size_t pivot,
                        std::vector<std::size_t> retained, std::vector<double> mu,
                        Matrix sigma, DiagPlusConstantMatrix precision,
                        double log_norm_const)
        : weights_(std::move(weights)),
          c_(c),
          pivot_(pivot),
          retained_(std::move(retained)),
          mu_(std::move(mu)),
          sigma_(std::move(sigma)),
          precision_(std::move(precision)),
          log_norm_const_(log_norm_const) {}

    WeightVector weights_;
    double c_;
    std::size_t pivot_;
    std::vector<std::size_t> retained_;
    std::vector<double> mu_;
    Matrix sigma_;
    DiagPlusConstantMatrix precision_;
    double log_norm_const_;
};

// Builds the conditional law. When pivot (0-based) is absent the coordinate
// with the largest |w_i| is eliminated (ties resolved toward the higher
// index) so the constant precision term 1/w_p^2 stays small; results are
// always reported in the caller's original coordinate order. The covariance
// is stored densely, so dimensions above dense_cap are rejected.
ConditionalGaussian condition_on_weighted_sum(const WeightVector& w, double c,
                                              std::optional<std::size_t> pivot = std::nullopt,
                                              std::size_t dense_cap = 10000);

// Density of the sum sum w_i Z_i at c: phi(c; 0, ||w||).
double marginal_sum_density(const WeightVector& w, double c);

// log K - (x - mu)' Sigma^{-1} (x - mu) / 2, evaluated through the
// structured precision in O(n).
double log_density(const ConditionalGaussian& law, std::span<const double> x);

// (x - mu)' Sigma^{-1} (x - mu); chi-square with n-1 degrees of freedom
// under the law.
double mahalanobis_sq(const ConditionalGaussian& law, std::span<const double> x);

// Returns {log_density(law, x), log Bayes ratio}: the second entry
// reconstructs the eliminated coordinate, multiplies the n unconditional
// factor densities and divides by the marginal sum density. The two values
// agree within rounding for every x.
std::pair<double, double> density_self_consistency(const ConditionalGaussian& law,
                                                   std::span<const double> x);

// Closed form for n = 2: the law of X_1 given X_1 + X_2 = c, as
// (mean, standard deviation).
struct BivariateLaw {
    double mean = 0.0;
    double sd = 0.0;
};
BivariateLaw bivariate_law(double w1, double w2, double c);

// The retained-coordinate law of Z = X / w: mean_i = mu_i / w_i and
// covariance_ij = sigma_ij / (w_i w_j) = delta_ij - w_i w_j / ||w||^2.
GaussianMoments z_space_law(const ConditionalGaussian& law);

// Reconstructs the full n-dimensional X-space point from retained
// coordinates, setting the pivot coordinate to c minus the rest.
FullSpacePoint lift(const ConditionalGaussian& law, std::span<const double> x);

}  // namespace cgauss

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgauss/errors.hpp"
#include "cgauss/matrix.hpp"

namespace cgauss {

// Streaming (count, sum, sum-of-outer-products) accumulator. merge() adds
// another accumulator's totals; merging partial accumulators in a fixed
// order makes the result independent of how the work was scheduled.
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t dim)
        : dim_(dim), sum_(dim, 0.0), outer_(dim * dim, 0.0) {}

    std::size_t dim() const noexcept { return dim_; }
    std::uint64_t count() const noexcept { return count_; }

    void add(std::span<const double> x) {
        ++count_;
        for (std::size_t i = 0; i < dim_; ++i) {
            sum_[i] += x[i];
            double* row = outer_.data() + i * dim_;
            for (std::size_t j = 0; j < dim_; ++j) {
                row[j] += x[i] * x[j];
            }
        }
    }

    void merge(const MomentAccumulator& other) {
        count_ += other.count_;
        for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += other.sum_[i];
        for (std::size_t i = 0; i < outer_.size(); ++i) outer_[i] += other.outer_[i];
    }

    std::vector<double> mean() const {
        if (count_ == 0) {
            throw InsufficientSamples("mean undefined for an empty accumulator");
        }
        std::vector<double> out(dim_);
        const double n = static_cast<double>(count_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = sum_[i] / n;
        return out;
    }

    // Unbiased sample covariance; needs at least two samples.
    Matrix covariance() const {
        if (count_ < 2) {
            throw InsufficientSamples("covariance needs at least 2 samples, have " +
                                      std::to_string(count_));
        }
        const double n = static_cast<double>(count_);
        const std::vector<double> m = mean();
        Matrix cov(dim_, dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t j = 0; j < dim_; ++j) {
                cov(i, j) = (outer_[i * dim_ + j] - n * m[i] * m[j]) / (n - 1.0);
            }
        }
        return cov;
    }

private:
    std::size_t dim_;
    std::uint64_t count_ = 0;
    std::vector<double> sum_;
    std::vector<double> outer_;
};

}  // namespace cgauss

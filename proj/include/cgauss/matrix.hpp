#pragma once

#include <cstddef>
#include <vector>

namespace cgauss {

// Dense row-major matrix. Just enough surface for covariance blocks,
// Cholesky factors and report tables; all structured algebra lives in
// DiagPlusConstantMatrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

}  // namespace cgauss

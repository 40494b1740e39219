#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgauss/conditional_law.hpp"
#include "cgauss/matrix.hpp"
#include "cgauss/moments.hpp"

namespace cgauss {

// `exact` draws from the conditional law (Cholesky of Sigma plus constraint
// lift); the three naive schemes satisfy the constraint by construction but
// follow the wrong distribution and are kept as diagnostic foils.
enum class Method { exact, naive_last_coord, naive_rescale, naive_shift };

const char* method_name(Method m) noexcept;

// Lower-triangular L with L L' = sigma.
struct CholeskyFactor {
    std::size_t dim = 0;
    std::vector<double> lower;  // row-major; strictly positive diagonal
};

// Throws NotPositiveDefinite when a pivot falls below dim * eps times the
// largest diagonal entry. Unreachable for covariances of valid laws.
CholeskyFactor cholesky(const Matrix& sigma);

struct SampleBatch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> points;  // row-major, rows x cols
    Method method = Method::exact;
    std::uint64_t seed = 0;
    Space space = Space::Z;
    std::string generator;              // RNG/transform id
    std::uint64_t degenerate_redraws = 0;  // rescale draws with |w'Z~| < 1e-30
    bool degenerate_constraint = false;    // rescale with c == 0 collapses to zero
};

// Every batch row satisfies the constraint up to rounding:
// |sum x_i - c| (X-space) resp. |w'z - c| (Z-space) <= 1e-9 max(1, |c|).
// Identical (method, parameters, seed) give bit-identical batches; samples
// are generated in fixed-size substream blocks, so the output is also
// independent of thread count and of the CGAUSS_CHUNK buffer size.
SampleBatch sample_exact(const ConditionalGaussian& law, std::size_t count,
                         std::uint64_t seed, Space space = Space::X);
SampleBatch sample_naive_last_coord(const WeightVector& w, double c, std::size_t count,
                                    std::uint64_t seed, Space space = Space::Z);
SampleBatch sample_naive_rescale(const WeightVector& w, double c, std::size_t count,
                                 std::uint64_t seed, Space space = Space::Z);
SampleBatch sample_naive_shift(const WeightVector& w, double c, std::size_t count,
                               std::uint64_t seed, Space space = Space::Z);

// Streaming statistics over a run, accumulated chunk by chunk so the batch
// is never materialized. The rows seen are bit-identical to the ones the
// sample_* functions return for the same arguments.
struct SampleStats {
    MomentAccumulator moments;       // full n-dimensional moments in `space`
    double max_abs_residual = 0.0;   // max |w'z - c| resp. |sum x - c|
    double mahalanobis_mean = 0.0;   // exact method only; NaN otherwise
    std::uint64_t degenerate_redraws = 0;
};

SampleStats sample_stats(Method method, const ConditionalGaussian& law, std::size_t count,
                         std::uint64_t seed, Space space);

// CSV: header z1..zn (or x1..xn), one sample per line, 17 significant
// digits. Binary: magic "CGS1", then rows and cols as little-endian
// uint64, then the points as little-endian doubles in column-major order.
void write_csv(const SampleBatch& batch, std::ostream& os);
void write_binary(const SampleBatch& batch, const std::string& path);

// Streamed exports: identical bytes to write_csv/write_binary applied to
// the materialized batch, without holding more than one chunk in memory.
struct ExportSummary {
    double max_abs_residual = 0.0;
    std::uint64_t degenerate_redraws = 0;
    bool degenerate_constraint = false;
};
ExportSummary export_csv(Method method, const ConditionalGaussian& law, std::size_t count,
                         std::uint64_t seed, Space space, std::ostream& os);
ExportSummary export_binary(Method method, const ConditionalGaussian& law, std::size_t count,
                            std::uint64_t seed, Space space, const std::string& path);

// Rows per streaming chunk; CGAUSS_CHUNK overrides the default 65536. A
// performance knob only: it never changes generated values.
std::size_t streaming_chunk_rows();

}  // namespace cgauss

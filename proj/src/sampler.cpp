#include "cgauss/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cgauss/errors.hpp"
#include "cgauss/rng.hpp"

namespace cgauss {

namespace {

// Rows per RNG substream. Fixed: the block grid, not the thread count or
// the CGAUSS_CHUNK buffering, determines which substream produces a row.
constexpr std::size_t kBlockRows = 4096;
constexpr double kRescaleFloor = 1e-30;

std::size_t hardware_threads() {
    const unsigned t = std::thread::hardware_concurrency();
    return t == 0 ? 1 : static_cast<std::size_t>(t);
}

struct GenContext {
    Method method = Method::exact;
    Space space = Space::Z;
    const WeightVector* w = nullptr;
    double c = 0.0;
    const ConditionalGaussian* law = nullptr;  // exact only
    CholeskyFactor chol;                       // exact only
};

Space natural_space(Method m) {
    return m == Method::exact ? Space::X : Space::Z;
}

GenContext make_context(Method method, const ConditionalGaussian& law, Space space) {
    GenContext ctx;
    ctx.method = method;
    ctx.space = space;
    ctx.w = &law.weights();
    ctx.c = law.c();
    if (method == Method::exact) {
        ctx.law = &law;
        ctx.chol = cholesky(law.covariance());
    }
    return ctx;
}

// Fills `rows` full n-dimensional samples into `out` (row-major), in the
// requested frame. Returns the number of rescale redraws.
std::uint64_t fill_block(const GenContext& ctx, std::uint64_t seed, std::uint64_t block,
                         std::size_t rows, double* out) {
    NormalRng rng(substream_seed(seed, block));
    const auto& w = ctx.w->values();
    const std::size_t n = w.size();
    std::uint64_t redraws = 0;

    switch (ctx.method) {
        case Method::exact: {
            const auto& mu = ctx.law->mean();
            const auto& retained = ctx.law->retained();
            const std::size_t m = mu.size();
            const double* chol = ctx.chol.lower.data();
            std::vector<double> g(m);
            for (std::size_t r = 0; r < rows; ++r) {
                double* row = out + r * n;
                for (double& v : g) v = rng.normal();
                double lifted_sum = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    double acc = mu[i];
                    const double* li = chol + i * m;
                    for (std::size_t j = 0; j <= i; ++j) acc += li[j] * g[j];
                    row[retained[i]] = acc;
                    lifted_sum += acc;
                }
                row[ctx.law->pivot()] = ctx.c - lifted_sum;
            }
            break;
        }
        case Method::naive_last_coord: {
            for (std::size_t r = 0; r < rows; ++r) {
                double* row = out + r * n;
                double acc = 0.0;
                for (std::size_t j = 0; j + 1 < n; ++j) {
                    row[j] = rng.normal();
                    acc += w[j] * row[j];
                }
                row[n - 1] = (ctx.c - acc) / w[n - 1];
            }
            break;
        }
        case Method::naive_rescale: {
            for (std::size_t r = 0; r < rows; ++r) {
                double* row = out + r * n;
                double y_tilde = 0.0;
                for (;;) {
                    y_tilde = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        row[j] = rng.normal();
                        y_tilde += w[j] * row[j];
                    }
                    if (std::abs(y_tilde) >= kRescaleFloor) break;
                    ++redraws;
                }
                const double factor = ctx.c / y_tilde;
                for (std::size_t j = 0; j < n; ++j) row[j] *= factor;
            }
            break;
        }
        case Method::naive_shift: {
            for (std::size_t r = 0; r < rows; ++r) {
                double* row = out + r * n;
                double y_tilde = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] = rng.normal();
                    y_tilde += w[j] * row[j];
                }
                const double shift = (ctx.c - y_tilde) / static_cast<double>(n);
                for (std::size_t j = 0; j < n; ++j) row[j] += shift / w[j];
            }
            break;
        }
    }

    if (ctx.space != natural_space(ctx.method)) {
        for (std::size_t r = 0; r < rows; ++r) {
            double* row = out + r * n;
            if (ctx.space == Space::Z) {
                for (std::size_t j = 0; j < n; ++j) row[j] /= w[j];
            } else {
                for (std::size_t j = 0; j < n; ++j) row[j] *= w[j];
            }
        }
    }
    return redraws;
}

double row_residual(const GenContext& ctx, const double* row) {
    const auto& w = ctx.w->values();
    double total = 0.0;
    if (ctx.space == Space::Z) {
        for (std::size_t j = 0; j < w.size(); ++j) total += w[j] * row[j];
    } else {
        for (std::size_t j = 0; j < w.size(); ++j) total += row[j];
    }
    return std::abs(total - ctx.c);
}

std::size_t block_count(std::size_t count) {
    return (count + kBlockRows - 1) / kBlockRows;
}

std::size_t rows_of_block(std::size_t count, std::size_t block) {
    const std::size_t start = block * kBlockRows;
    return std::min(kBlockRows, count - start);
}

// Runs fn(block) over all blocks on up to hardware_threads() workers and
// returns the summed redraw counts.
template <typename Fn>
std::uint64_t for_all_blocks(std::size_t nblocks, Fn&& fn) {
    const std::size_t workers = std::min(hardware_threads(), nblocks);
    if (workers <= 1) {
        std::uint64_t total = 0;
        for (std::size_t b = 0; b < nblocks; ++b) total += fn(b);
        return total;
    }
    std::vector<std::future<std::uint64_t>> tasks;
    tasks.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        tasks.push_back(std::async(std::launch::async, [&fn, t, workers, nblocks] {
            std::uint64_t local = 0;
            for (std::size_t b = t; b < nblocks; b += workers) local += fn(b);
            return local;
        }));
    }
    std::uint64_t total = 0;
    for (auto& task : tasks) total += task.get();
    return total;
}

SampleBatch run_batch(const GenContext& ctx, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw Error("sample count must be at least 1");
    const std::size_t n = ctx.w->size();
    SampleBatch batch;
    batch.rows = count;
    batch.cols = n;
    batch.points.resize(count * n);
    batch.method = ctx.method;
    batch.seed = seed;
    batch.space = ctx.space;
    batch.generator = NormalRng::kGeneratorId;
    batch.degenerate_constraint = ctx.method == Method::naive_rescale && ctx.c == 0.0;

    const std::size_t nblocks = block_count(count);
    batch.degenerate_redraws = for_all_blocks(nblocks, [&](std::size_t b) {
        return fill_block(ctx, seed, b, rows_of_block(count, b),
                          batch.points.data() + b * kBlockRows * n);
    });
    return batch;
}

struct BlockStats {
    explicit BlockStats(std::size_t dim) : moments(dim) {}
    MomentAccumulator moments;
    double max_residual = 0.0;
    double quad_sum = 0.0;
    std::uint64_t redraws = 0;
};

const char* format_double(char* buf, std::size_t cap, double v) {
    std::snprintf(buf, cap, "%.17g", v);
    return buf;
}

std::string csv_header(Space space, std::size_t n) {
    std::string header;
    for (std::size_t j = 0; j < n; ++j) {
        header += space_name(space);
        header += std::to_string(j + 1);
        if (j + 1 < n) header += ',';
    }
    header += '\n';
    return header;
}

void append_csv_row(std::string& out, const double* row, std::size_t n) {
    char buf[40];
    for (std::size_t j = 0; j < n; ++j) {
        out += format_double(buf, sizeof buf, row[j]);
        out += j + 1 < n ? ',' : '\n';
    }
}

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out += static_cast<char>((v >> (8 * k)) & 0xff);
}

void append_f64_le(std::string& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    append_u64_le(out, bits);
}

std::string binary_header(std::size_t rows, std::size_t cols) {
    std::string header = "CGS1";
    append_u64_le(header, rows);
    append_u64_le(header, cols);
    return header;
}

constexpr std::size_t kBinaryHeaderBytes = 20;

}  // namespace

const char* method_name(Method m) noexcept {
    switch (m) {
        case Method::exact: return "exact";
        case Method::naive_last_coord: return "last-coord";
        case Method::naive_rescale: return "rescale";
        case Method::naive_shift: return "shift";
    }
    return "unknown";
}

std::size_t streaming_chunk_rows() {
    if (const char* env = std::getenv("CGAUSS_CHUNK")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return 65536;
}

CholeskyFactor cholesky(const Matrix& sigma) {
    if (sigma.rows == 0 || sigma.rows != sigma.cols) {
        throw DimensionMismatch("cholesky needs a nonempty square matrix");
    }
    const std::size_t m = sigma.rows;
    double max_diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) max_diag = std::max(max_diag, sigma(i, i));
    const double pivot_floor =
        static_cast<double>(m) * std::numeric_limits<double>::epsilon() * max_diag;

    CholeskyFactor f;
    f.dim = m;
    f.lower.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = sigma(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                acc -= f.lower[i * m + k] * f.lower[j * m + k];
            }
            if (i == j) {
                if (!(acc > pivot_floor)) {
                    throw NotPositiveDefinite("matrix is not positive definite at row " +
                                              std::to_string(i + 1));
                }
                f.lower[i * m + i] = std::sqrt(acc);
            } else {
                f.lower[i * m + j] = acc / f.lower[j * m + j];
            }
        }
    }
    return f;
}

SampleBatch sample_exact(const ConditionalGaussian& law, std::size_t count,
                         std::uint64_t seed, Space space) {
    return run_batch(make_context(Method::exact, law, space), count, seed);
}

namespace {

SampleBatch run_naive(Method method, const WeightVector& w, double c, std::size_t count,
                      std::uint64_t seed, Space space) {
    GenContext ctx;
    ctx.method = method;
    ctx.space = space;
    ctx.w = &w;
    ctx.c = c;
    if (!std::isfinite(c)) throw Error("constraint value must be finite");
    return run_batch(ctx, count, seed);
}

}  // namespace

SampleBatch sample_naive_last_coord(const WeightVector& w, double c, std::size_t count,
                                    std::uint64_t seed, Space space) {
    return run_naive(Method::naive_last_coord, w, c, count, seed, space);
}

SampleBatch sample_naive_rescale(const WeightVector& w, double c, std::size_t count,
                                 std::uint64_t seed, Space space) {
    return run_naive(Method::naive_rescale, w, c, count, seed, space);
}

SampleBatch sample_naive_shift(const WeightVector& w, double c, std::size_t count,
                               std::uint64_t seed, Space space) {
    return run_naive(Method::naive_shift, w, c, count, seed, space);
}

SampleStats sample_stats(Method method, const ConditionalGaussian& law, std::size_t count,
                         std::uint64_t seed, Space space) {
    if (count == 0) throw Error("sample count must be at least 1");
    const GenContext ctx = make_context(method, law, space);
    const std::size_t n = ctx.w->size();
    const std::size_t nblocks = block_count(count);
    const std::size_t wave =
        std::max<std::size_t>(1, (streaming_chunk_rows() + kBlockRows - 1) / kBlockRows);

    SampleStats out{MomentAccumulator(n), 0.0,
                    std::numeric_limits<double>::quiet_NaN(), 0};
    double quad_total = 0.0;

    const auto run_block = [&](std::size_t block, BlockStats& bs) {
        std::vector<double> buf(kBlockRows * n);
        const std::size_t rows = rows_of_block(count, block);
        bs.redraws = fill_block(ctx, seed, block, rows, buf.data());
        std::vector<double> x_retained(method == Method::exact ? law.dim() : 0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = buf.data() + r * n;
            bs.moments.add(std::span<const double>(row, n));
            bs.max_residual = std::max(bs.max_residual, row_residual(ctx, row));
            if (method == Method::exact) {
                const auto& w = ctx.w->values();
                for (std::size_t k = 0; k < law.dim(); ++k) {
                    const std::size_t idx = law.retained()[k];
                    x_retained[k] = space == Space::Z ? row[idx] * w[idx] : row[idx];
                }
                bs.quad_sum += mahalanobis_sq(law, x_retained);
            }
        }
    };

    // Waves of blocks run in parallel; partials merge in block order so the
    // totals do not depend on scheduling.
    for (std::size_t wave_start = 0; wave_start < nblocks; wave_start += wave) {
        const std::size_t wave_blocks = std::min(wave, nblocks - wave_start);
        std::vector<BlockStats> slots(wave_blocks, BlockStats(n));
        const std::size_t workers = std::min(hardware_threads(), wave_blocks);
        if (workers <= 1) {
            for (std::size_t k = 0; k < wave_blocks; ++k) run_block(wave_start + k, slots[k]);
        } else {
            std::vector<std::future<void>> tasks;
            tasks.reserve(workers);
            for (std::size_t t = 0; t < workers; ++t) {
                tasks.push_back(std::async(std::launch::async, [&, t] {
                    for (std::size_t k = t; k < wave_blocks; k += workers) {
                        run_block(wave_start + k, slots[k]);
                    }
                }));
            }
            for (auto& task : tasks) task.get();
        }
        for (const BlockStats& bs : slots) {
            out.moments.merge(bs.moments);
            out.max_abs_residual = std::max(out.max_abs_residual, bs.max_residual);
            quad_total += bs.quad_sum;
            out.degenerate_redraws += bs.redraws;
        }
    }

    if (method == Method::exact) {
        out.mahalanobis_mean = quad_total / static_cast<double>(count);
    }
    return out;
}

void write_csv(const SampleBatch& batch, std::ostream& os) {
    os << csv_header(batch.space, batch.cols);
    std::string line;
    for (std::size_t r = 0; r < batch.rows; ++r) {
        line.clear();
        append_csv_row(line, batch.points.data() + r * batch.cols, batch.cols);
        os << line;
    }
    if (!os) throw Error("CSV write failed");
}

void write_binary(const SampleBatch& batch, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path);
    f << binary_header(batch.rows, batch.cols);
    std::string buf;
    buf.reserve(batch.rows * 8);
    for (std::size_t j = 0; j < batch.cols; ++j) {
        buf.clear();
        for (std::size_t i = 0; i < batch.rows; ++i) {
            append_f64_le(buf, batch.points[i * batch.cols + j]);
        }
        f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    f.flush();
    if (!f) throw Error("write failed: " + path);
}

ExportSummary export_csv(Method method, const ConditionalGaussian& law, std::size_t count,
                         std::uint64_t seed, Space space, std::ostream& os) {
    if (count == 0) throw Error("sample count must be at least 1");
    const GenContext ctx = make_context(method, law, space);
    const std::size_t n = ctx.w->size();
    ExportSummary summary;
    summary.degenerate_constraint = method == Method::naive_rescale && ctx.c == 0.0;

    os << csv_header(space, n);
    const std::size_t nblocks = block_count(count);
    std::vector<double> buf(kBlockRows * n);
    std::string text;
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t rows = rows_of_block(count, b);
        summary.degenerate_redraws += fill_block(ctx, seed, b, rows, buf.data());
        text.clear();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = buf.data() + r * n;
            summary.max_abs_residual = std::max(summary.max_abs_residual, row_residual(ctx, row));
            append_csv_row(text, row, n);
        }
        os << text;
    }
    if (!os) throw Error("CSV write failed");
    return summary;
}

ExportSummary export_binary(Method method, const ConditionalGaussian& law, std::size_t count,
                            std::uint64_t seed, Space space, const std::string& path) {
    if (count == 0) throw Error("sample count must be at least 1");
    const GenContext ctx = make_context(method, law, space);
    const std::size_t n = ctx.w->size();
    ExportSummary summary;
    summary.degenerate_constraint = method == Method::naive_rescale && ctx.c == 0.0;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path);
    f << binary_header(count, n);

    const std::size_t nblocks = block_count(count);
    std::vector<double> buf(kBlockRows * n);
    std::string column;
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t rows = rows_of_block(count, b);
        const std::size_t row0 = b * kBlockRows;
        summary.degenerate_redraws += fill_block(ctx, seed, b, rows, buf.data());
        for (std::size_t r = 0; r < rows; ++r) {
            summary.max_abs_residual =
                std::max(summary.max_abs_residual, row_residual(ctx, buf.data() + r * n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            column.clear();
            for (std::size_t r = 0; r < rows; ++r) {
                append_f64_le(column, buf[r * n + j]);
            }
            f.seekp(static_cast<std::streamoff>(kBinaryHeaderBytes + (j * count + row0) * 8));
            f.write(column.data(), static_cast<std::streamsize>(column.size()));
        }
    }
    f.flush();
    if (!f) throw Error("write failed: " + path);
    return summary;
}

}  // namespace cgauss

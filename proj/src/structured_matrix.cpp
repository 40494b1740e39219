#include "cgauss/structured_matrix.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "cgauss/errors.hpp"

namespace cgauss {

namespace {

// Value f * 2^e with f in [0.5, 1). Keeps the determinant recursion within
// double range for any dimension.
struct Scaled {
    double frac = 0.0;
    long long exp2 = 0;
};

Scaled normalized(double f, long long e) {
    int k = 0;
    f = std::frexp(f, &k);
    return {f, e + k};
}

Scaled scaled_of(double v) { return normalized(v, 0); }

Scaled mul(Scaled a, double v) { return normalized(a.frac * v, a.exp2); }

Scaled add(Scaled a, Scaled b) {
    if (a.frac == 0.0) return b;
    if (b.frac == 0.0) return a;
    if (a.exp2 < b.exp2) std::swap(a, b);
    const long long shift = a.exp2 - b.exp2;
    // Beyond ~1076 bits the smaller term is below one ulp of the larger.
    const double bf = shift > 1076 ? 0.0 : std::ldexp(b.frac, -static_cast<int>(shift));
    return normalized(a.frac + bf, a.exp2);
}

double log_of(Scaled a) {
    return std::log(a.frac) + static_cast<double>(a.exp2) * std::numbers::ln2;
}

void check_positive(double v, const std::string& label) {
    if (!(std::isfinite(v) && v > 0.0)) {
        throw NonPositiveEntry(label + " must be positive and finite, got " +
                               std::to_string(v));
    }
}

}  // namespace

DiagPlusConstantMatrix::DiagPlusConstantMatrix(double a0, std::vector<double> diag)
    : a0_(a0), diag_(std::move(diag)) {
    check_positive(a0_, "a0");
    if (diag_.empty()) {
        throw NonPositiveEntry("diagonal must have at least one entry");
    }
    for (std::size_t i = 0; i < diag_.size(); ++i) {
        check_positive(diag_[i], "a" + std::to_string(i + 1));
    }
    log_pi_ = std::log(a0_);
    s_ = 1.0 / a0_;
    for (const double v : diag_) {
        log_pi_ += std::log(v);
        s_ += 1.0 / v;
    }
}

Matrix DiagPlusConstantMatrix::dense() const {
    const std::size_t m = dim();
    Matrix out(m, m, a0_);
    for (std::size_t i = 0; i < m; ++i) {
        out(i, i) += diag_[i];
    }
    return out;
}

Matrix StructuredInverse::dense() const {
    const std::size_t m = dim();
    Matrix out(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out(i, j) = entry(i, j);
        }
    }
    return out;
}

bool is_positive_definite(double a0, std::span<const double> diag) noexcept {
    if (diag.empty() || !(std::isfinite(a0) && a0 > 0.0)) return false;
    for (const double v : diag) {
        if (!(std::isfinite(v) && v > 0.0)) return false;
    }
    return true;
}

double log_determinant(const DiagPlusConstantMatrix& a) {
    return a.log_product() + std::log(a.recip_sum());
}

double determinant(const DiagPlusConstantMatrix& a) {
    return std::exp(log_determinant(a));
}

double log_determinant_recursive(const DiagPlusConstantMatrix& a) {
    const auto& d = a.diag();
    // Base case |A(1)| = a_1 + a_0 with running pi(k) = a_0 a_1 ... a_k.
    Scaled det = scaled_of(d[0] + a.a0());
    Scaled pi = mul(scaled_of(a.a0()), d[0]);
    for (std::size_t k = 1; k < d.size(); ++k) {
        det = add(mul(det, d[k]), pi);
        pi = mul(pi, d[k]);
    }
    return log_of(det);
}

StructuredInverse inverse(const DiagPlusConstantMatrix& a) {
    StructuredInverse inv;
    inv.inv_diag.reserve(a.dim());
    for (const double v : a.diag()) {
        inv.inv_diag.push_back(1.0 / v);
    }
    inv.s = a.recip_sum();
    return inv;
}

std::vector<double> solve(const DiagPlusConstantMatrix& a, std::span<const double> b) {
    const std::size_t m = a.dim();
    if (b.size() != m) {
        throw DimensionMismatch("solve: right-hand side has length " +
                                std::to_string(b.size()) + ", expected " +
                                std::to_string(m));
    }
    std::vector<double> x(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        x[i] = b[i] / a.diag()[i];
        total += x[i];
    }
    const double correction = total / a.recip_sum();
    for (std::size_t i = 0; i < m; ++i) {
        x[i] -= correction / a.diag()[i];
    }
    return x;
}

}  // namespace cgauss

#include "cgauss/conditional_law.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cgauss/errors.hpp"

namespace cgauss {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)

double log_normal_pdf(double v, double sd) {
    return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * (v / sd) * (v / sd);
}

}  // namespace

const char* space_name(Space s) noexcept { return s == Space::X ? "x" : "z"; }

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.size() < 2) {
        throw Error("need at least two weights, got " + std::to_string(w_.size()));
    }
    for (std::size_t i = 0; i < w_.size(); ++i) {
        if (!std::isfinite(w_[i])) {
            throw Error("weight " + std::to_string(i + 1) + " is not finite");
        }
        if (w_[i] == 0.0) {
            throw ZeroWeight("weight " + std::to_string(i + 1) + " is zero");
        }
    }
    norm_sq_ = 0.0;
    for (const double v : w_) {
        norm_sq_ += v * v;
    }
}

ConditionalGaussian condition_on_weighted_sum(const WeightVector& w, double c,
                                              std::optional<std::size_t> pivot,
                                              std::size_t dense_cap) {
    if (!std::isfinite(c)) {
        throw Error("constraint value must be finite");
    }
    const std::size_t n = w.size();
    std::size_t p = 0;
    if (pivot.has_value()) {
        p = *pivot;
        if (p >= n) {
            throw BadPivot("pivot " + std::to_string(p + 1) + " out of range [1.." +
                           std::to_string(n) + "]");
        }
    } else {
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(w[i]) >= std::abs(w[p])) p = i;
        }
    }
    const std::size_t m = n - 1;
    if (m > dense_cap) {
        throw Error("dimension " + std::to_string(m) +
                    " exceeds the dense covariance cap " + std::to_string(dense_cap));
    }

    std::vector<std::size_t> retained;
    retained.reserve(m);
    for (std::size_t i = 0; i < n; ++i) {
        if (i != p) retained.push_back(i);
    }

    const double norm_sq = w.norm_sq();

    std::vector<double> mu(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double wi = w[retained[k]];
        mu[k] = c * wi * wi / norm_sq;
    }

    // beta_ii = w_i^2 (||w||^2 - w_i^2) / ||w||^2, with the bracket formed as
    // an exclusion sum rather than a subtraction so a dominant weight cannot
    // cancel; beta_ij = -w_i^2 w_j^2 / ||w||^2.
    Matrix sigma(m, m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = retained[k];
        const double wi_sq = w[i] * w[i];
        double excl = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (t != i) excl += w[t] * w[t];
        }
        sigma(k, k) = wi_sq * excl / norm_sq;
        for (std::size_t l = k + 1; l < m; ++l) {
            const double wj_sq = w[retained[l]] * w[retained[l]];
            const double off = -wi_sq * wj_sq / norm_sq;
            sigma(k, l) = off;
            sigma(l, k) = off;
        }
    }

    std::vector<double> prec_diag(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double wi = w[retained[k]];
        prec_diag[k] = 1.0 / (wi * wi);
    }
    DiagPlusConstantMatrix precision(1.0 / (w[p] * w[p]), std::move(prec_diag));

    double log_abs_prod = 0.0;
    for (const double v : w.values()) {
        log_abs_prod += std::log(std::abs(v));
    }
    const double log_norm_const =
        0.5 * std::log(norm_sq) - 0.5 * static_cast<double>(m) * kLogTwoPi - log_abs_prod;

    return ConditionalGaussian(w, c, p, std::move(retained), std::move(mu),
                               std::move(sigma), std::move(precision), log_norm_const);
}

double marginal_sum_density(const WeightVector& w, double c) {
    const double var = w.norm_sq();
    return std::exp(-0.5 * c * c / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double mahalanobis_sq(const ConditionalGaussian& law, std::span<const double> x) {
    const std::size_t m = law.dim();
    if (x.size() != m) {
        throw DimensionMismatch("point has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(m));
    }
    const auto& prec = law.precision();
    const auto& mu = law.mean();
    double quad = 0.0;
    double dev_sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double v = x[k] - mu[k];
        quad += prec.diag()[k] * v * v;
        dev_sum += v;
    }
    quad += prec.a0() * dev_sum * dev_sum;
    return quad;
}

double log_density(const ConditionalGaussian& law, std::span<const double> x) {
    return law.log_norm_const() - 0.5 * mahalanobis_sq(law, x);
}

std::pair<double, double> density_self_consistency(const ConditionalGaussian& law,
                                                   std::span<const double> x) {
    const double closed_form = log_density(law, x);

    const FullSpacePoint full = lift(law, x);
    const auto& w = law.weights();
    double log_num = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        log_num += log_normal_pdf(full.coords[i], std::abs(w[i]));
    }
    const double log_den = log_normal_pdf(law.c(), std::sqrt(w.norm_sq()));
    return {closed_form, log_num - log_den};
}

BivariateLaw bivariate_law(double w1, double w2, double c) {
    for (const double v : {w1, w2}) {
        if (!std::isfinite(v)) throw Error("weights must be finite");
        if (v == 0.0) throw ZeroWeight("bivariate weights must be nonzero");
    }
    if (!std::isfinite(c)) throw Error("constraint value must be finite");
    const double inv = 1.0 / (w1 * w1) + 1.0 / (w2 * w2);
    return {c / (w2 * w2 * inv), 1.0 / std::sqrt(inv)};
}

GaussianMoments z_space_law(const ConditionalGaussian& law) {
    const std::size_t m = law.dim();
    const auto& w = law.weights();
    GaussianMoments out;
    out.mean.resize(m);
    out.covariance = Matrix(m, m);
    for (std::size_t k = 0; k < m; ++k) {
        const double wk = w[law.retained()[k]];
        out.mean[k] = law.mean()[k] / wk;
        for (std::size_t l = 0; l < m; ++l) {
            const double wl = w[law.retained()[l]];
            out.covariance(k, l) = law.covariance()(k, l) / (wk * wl);
        }
    }
    return out;
}

FullSpacePoint lift(const ConditionalGaussian& law, std::span<const double> x) {
    const std::size_t m = law.dim();
    if (x.size() != m) {
        throw DimensionMismatch("point has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(m));
    }
    FullSpacePoint out;
    out.coords.assign(m + 1, 0.0);
    out.space = Space::X;
    double partial = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        out.coords[law.retained()[k]] = x[k];
        partial += x[k];
    }
    out.coords[law.pivot()] = law.c() - partial;
    return out;
}

}  // namespace cgauss

#include "cgauss/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "cgauss/errors.hpp"
#include "cgauss/rng.hpp"

namespace cgauss {

namespace {

constexpr std::size_t kBlockProposals = 4096;

std::size_t hardware_threads() {
    const unsigned t = std::thread::hardware_concurrency();
    return t == 0 ? 1 : static_cast<std::size_t>(t);
}

double guarded_z(double diff, double se) {
    if (se > 0.0) return diff / se;
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

}  // namespace

EmpiricalMoments slice_oracle(const WeightVector& w, double c, double epsilon,
                              std::uint64_t proposals, std::uint64_t seed) {
    if (!(std::isfinite(epsilon) && epsilon > 0.0)) {
        throw Error("epsilon must be positive and finite");
    }
    if (proposals < 10000) {
        throw Error("need at least 10^4 proposals, got " + std::to_string(proposals));
    }
    const std::size_t n = w.size();
    const std::uint64_t nblocks = (proposals + kBlockProposals - 1) / kBlockProposals;
    const std::uint64_t wave = std::max<std::uint64_t>(
        1, (streaming_chunk_rows() + kBlockProposals - 1) / kBlockProposals);

    MomentAccumulator total(n);
    for (std::uint64_t wave_start = 0; wave_start < nblocks; wave_start += wave) {
        const std::uint64_t wave_blocks = std::min(wave, nblocks - wave_start);
        std::vector<MomentAccumulator> slots(wave_blocks, MomentAccumulator(n));

        const auto run_block = [&](std::uint64_t block, MomentAccumulator& acc) {
            NormalRng rng(substream_seed(seed, block));
            const std::uint64_t start = block * kBlockProposals;
            const std::uint64_t trials = std::min<std::uint64_t>(kBlockProposals, proposals - start);
            std::vector<double> z(n);
            for (std::uint64_t t = 0; t < trials; ++t) {
                double weighted = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    z[j] = rng.normal();
                    weighted += w[j] * z[j];
                }
                if (std::abs(weighted - c) < epsilon) {
                    acc.add(z);
                }
            }
        };

        const std::size_t workers = std::min<std::size_t>(hardware_threads(), wave_blocks);
        if (workers <= 1) {
            for (std::uint64_t k = 0; k < wave_blocks; ++k) run_block(wave_start + k, slots[k]);
        } else {
            std::vector<std::future<void>> tasks;
            tasks.reserve(workers);
            for (std::size_t t = 0; t < workers; ++t) {
                tasks.push_back(std::async(std::launch::async, [&, t] {
                    for (std::uint64_t k = t; k < wave_blocks; k += workers) {
                        run_block(wave_start + k, slots[k]);
                    }
                }));
            }
            for (auto& task : tasks) task.get();
        }
        for (const auto& acc : slots) total.merge(acc);
    }

    if (total.count() < 100) {
        throw TooFewAccepted("accepted only " + std::to_string(total.count()) + " of " +
                             std::to_string(proposals) +
                             " proposals; widen epsilon or raise proposals");
    }
    EmpiricalMoments out;
    out.mean = total.mean();
    out.covariance = total.covariance();
    out.count = total.count();
    out.proposals = proposals;
    out.band = epsilon;
    return out;
}

double slice_acceptance_estimate(const WeightVector& w, double c, double epsilon) {
    const double var = w.norm_sq();
    const double density = std::exp(-0.5 * c * c / var) / std::sqrt(2.0 * std::numbers::pi * var);
    return 2.0 * epsilon * density;
}

GaussianMoments dense_conditioning_oracle(const WeightVector& w, double c) {
    const std::size_t n = w.size();
    std::vector<double> d(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = w[i] * w[i];
        total += d[i];
    }
    GaussianMoments out;
    out.mean.resize(n);
    out.covariance = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.mean[i] = c * d[i] / total;
        for (std::size_t j = 0; j < n; ++j) {
            out.covariance(i, j) = (i == j ? d[i] : 0.0) - d[i] * d[j] / total;
        }
    }
    return out;
}

GaussianMoments to_z_space(const GaussianMoments& x_moments, const WeightVector& w) {
    const std::size_t n = x_moments.mean.size();
    if (n != w.size()) {
        throw DimensionMismatch("moments dimension does not match the weight vector");
    }
    GaussianMoments out;
    out.mean.resize(n);
    out.covariance = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.mean[i] = x_moments.mean[i] / w[i];
        for (std::size_t j = 0; j < n; ++j) {
            out.covariance(i, j) = x_moments.covariance(i, j) / (w[i] * w[j]);
        }
    }
    return out;
}

GaussianMoments restrict_moments(const GaussianMoments& moments,
                                 std::span<const std::size_t> indices) {
    GaussianMoments out;
    out.mean.resize(indices.size());
    out.covariance = Matrix(indices.size(), indices.size());
    for (std::size_t a = 0; a < indices.size(); ++a) {
        out.mean[a] = moments.mean[indices[a]];
        for (std::size_t b = 0; b < indices.size(); ++b) {
            out.covariance(a, b) = moments.covariance(indices[a], indices[b]);
        }
    }
    return out;
}

GaussianMoments lift_law_moments(const ConditionalGaussian& law, Space space) {
    const std::size_t n = law.weights().size();
    const std::size_t m = law.dim();
    const auto& retained = law.retained();
    const std::size_t p = law.pivot();

    GaussianMoments out;
    out.mean.assign(n, 0.0);
    out.covariance = Matrix(n, n);

    double mean_sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        out.mean[retained[k]] = law.mean()[k];
        mean_sum += law.mean()[k];
    }
    out.mean[p] = law.c() - mean_sum;

    double grand = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double col_sum = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            out.covariance(retained[k], retained[l]) = law.covariance()(k, l);
            col_sum += law.covariance()(k, l);
        }
        out.covariance(retained[k], p) = -col_sum;
        out.covariance(p, retained[k]) = -col_sum;
        grand += col_sum;
    }
    out.covariance(p, p) = grand;

    return space == Space::X ? out : to_z_space(out, law.weights());
}

VerificationReport compare(const GaussianMoments& analytic, const EmpiricalMoments& empirical,
                           double z_mean_threshold, double z_cov_threshold) {
    const std::size_t d = analytic.mean.size();
    if (empirical.mean.size() != d || analytic.covariance.rows != d ||
        empirical.covariance.rows != d) {
        throw DimensionMismatch("analytic and empirical moments have different dimensions");
    }
    if (empirical.count < 2) {
        throw InsufficientSamples("need at least 2 samples, got " +
                                  std::to_string(empirical.count));
    }

    VerificationReport rep;
    rep.z_mean_threshold = z_mean_threshold;
    rep.z_cov_threshold = z_cov_threshold;
    rep.count = empirical.count;
    rep.proposals = empirical.proposals;
    rep.band = empirical.band;

    const double n = static_cast<double>(empirical.count);
    rep.mean_z.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double se = std::sqrt(std::max(0.0, empirical.covariance(i, i)) / n);
        rep.mean_z[i] = guarded_z(empirical.mean[i] - analytic.mean[i], se);
        rep.max_abs_mean_z = std::max(rep.max_abs_mean_z, std::abs(rep.mean_z[i]));
    }
    rep.cov_z = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double var_est = (empirical.covariance(i, i) * empirical.covariance(j, j) +
                                    empirical.covariance(i, j) * empirical.covariance(i, j)) /
                                   n;
            const double se = std::sqrt(std::max(0.0, var_est));
            rep.cov_z(i, j) = guarded_z(empirical.covariance(i, j) - analytic.covariance(i, j), se);
            rep.max_abs_cov_z = std::max(rep.max_abs_cov_z, std::abs(rep.cov_z(i, j)));
        }
    }
    rep.pass = rep.max_abs_mean_z <= z_mean_threshold && rep.max_abs_cov_z <= z_cov_threshold;
    return rep;
}

VerificationReport compare(const ConditionalGaussian& law, const EmpiricalMoments& empirical,
                           Space space, double z_mean_threshold, double z_cov_threshold) {
    const std::size_t n = law.weights().size();
    if (empirical.mean.size() == n) {
        return compare(lift_law_moments(law, space), empirical, z_mean_threshold,
                       z_cov_threshold);
    }
    if (empirical.mean.size() == law.dim()) {
        GaussianMoments analytic;
        if (space == Space::X) {
            analytic.mean = law.mean();
            analytic.covariance = law.covariance();
        } else {
            analytic = z_space_law(law);
        }
        return compare(analytic, empirical, z_mean_threshold, z_cov_threshold);
    }
    throw DimensionMismatch("empirical moments match neither the full nor the retained dimension");
}

EmpiricalMoments empirical_from(const MomentAccumulator& acc) {
    EmpiricalMoments out;
    out.mean = acc.mean();
    out.covariance = acc.covariance();
    out.count = acc.count();
    return out;
}

}  // namespace cgauss

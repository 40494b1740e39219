#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cgauss/conditional_law.hpp"
#include "cgauss/matrix.hpp"
#include "cgauss/moments.hpp"
#include "cgauss/sampler.hpp"

namespace cgauss {

// Empirical mean/covariance of a Monte Carlo run. `proposals` and `band`
// are zero when the source satisfied the constraint exactly instead of
// being accepted within a band.
struct EmpiricalMoments {
    std::vector<double> mean;
    Matrix covariance;
    std::uint64_t count = 0;
    std::uint64_t proposals = 0;
    double band = 0.0;
};

// Rejection estimate of the conditional law: draws Z ~ N(0, I_n) and
// accepts when |w'Z - c| < epsilon. Moments of the accepted draws converge
// to the Z-space conditional law with O(epsilon^2) bias. Requires
// proposals >= 10^4; throws TooFewAccepted below 100 acceptances.
EmpiricalMoments slice_oracle(const WeightVector& w, double c, double epsilon,
                              std::uint64_t proposals, std::uint64_t seed);

// First-order acceptance-rate model for the slice oracle:
// 2 epsilon phi(c; 0, ||w||).
double slice_acceptance_estimate(const WeightVector& w, double c, double epsilon);

// Textbook conditioning of X ~ N(0, diag(w^2)) on 1'X = c, computed with
// plain dense arithmetic and no code shared with the conditional-law
// module: mean = c d / (1'd), covariance = diag(d) - d d' / (1'd) with
// d_i = w_i^2. Full n-dimensional X-space moments.
GaussianMoments dense_conditioning_oracle(const WeightVector& w, double c);

// Rescales full-dimensional X-space moments to Z-space (divide by w_i,
// w_i w_j).
GaussianMoments to_z_space(const GaussianMoments& x_moments, const WeightVector& w);

// Restriction of moments to a coordinate subset.
GaussianMoments restrict_moments(const GaussianMoments& moments,
                                 std::span<const std::size_t> indices);

// Full n-dimensional analytic moments implied by a law, reconstructed from
// its retained mean/covariance plus the constraint; the pivot row is the
// negated column sum, the pivot variance the grand sum.
GaussianMoments lift_law_moments(const ConditionalGaussian& law, Space space);

struct VerificationReport {
    std::vector<double> mean_z;  // (empirical - analytic) / SE per coordinate
    Matrix cov_z;
    double max_abs_mean_z = 0.0;
    double max_abs_cov_z = 0.0;
    double z_mean_threshold = 5.0;
    double z_cov_threshold = 6.0;
    bool pass = false;
    // run metadata, copied from the empirical source / set by the caller
    std::uint64_t count = 0;
    std::uint64_t proposals = 0;
    double band = 0.0;
    std::uint64_t seed = 0;
};

// z-scores use standard errors from the empirical covariance:
// SE(mean_i) = sqrt(cov_ii / count) and, via the Normal fourth-moment
// approximation, SE(cov_ij) = sqrt((cov_ii cov_jj + cov_ij^2) / count).
// Passes iff every |z| is within its threshold.
VerificationReport compare(const GaussianMoments& analytic, const EmpiricalMoments& empirical,
                           double z_mean_threshold = 5.0, double z_cov_threshold = 6.0);

// Convenience overload: compares against the law's analytic moments in the
// given space, lifting to all n coordinates when the empirical moments are
// full-dimensional and restricting to the retained ones otherwise.
VerificationReport compare(const ConditionalGaussian& law, const EmpiricalMoments& empirical,
                           Space space, double z_mean_threshold = 5.0,
                           double z_cov_threshold = 6.0);

EmpiricalMoments empirical_from(const MomentAccumulator& acc);

}  // namespace cgauss

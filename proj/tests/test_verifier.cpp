#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cgauss/conditional_law.hpp"
#include "cgauss/errors.hpp"
#include "cgauss/sampler.hpp"
#include "cgauss/verifier.hpp"
#include "test_support.hpp"

using namespace cgauss;
using test_support::rel_err;
using test_support::TestRng;

TEST_CASE("dense conditioning oracle on pinned cases") {
    const auto sym = dense_conditioning_oracle(WeightVector({1.0, 1.0}), 0.0);
    CHECK(sym.mean[0] == 0.0);
    CHECK(sym.mean[1] == 0.0);
    CHECK(rel_err(sym.covariance(0, 0), 0.5) < 1e-14);
    CHECK(rel_err(sym.covariance(0, 1), -0.5) < 1e-14);
    CHECK(rel_err(sym.covariance(1, 1), 0.5) < 1e-14);

    const auto generic = dense_conditioning_oracle(WeightVector({1.0, 2.0, 3.0}), 6.0);
    CHECK(rel_err(generic.mean[0], 3.0 / 7.0) < 1e-14);
    CHECK(rel_err(generic.mean[1], 12.0 / 7.0) < 1e-14);
    CHECK(rel_err(generic.mean[2], 27.0 / 7.0) < 1e-14);
    // conditional means always sum to the constraint value
    CHECK(rel_err(generic.mean[0] + generic.mean[1] + generic.mean[2], 6.0) < 1e-14);
    CHECK(rel_err(generic.covariance(0, 0), 13.0 / 14.0) < 1e-14);
    CHECK(rel_err(generic.covariance(1, 1), 20.0 / 7.0) < 1e-14);
    CHECK(rel_err(generic.covariance(2, 2), 45.0 / 14.0) < 1e-14);

    const auto pythagorean = dense_conditioning_oracle(WeightVector({3.0, 4.0}), 5.0);
    CHECK(rel_err(pythagorean.mean[0], 9.0 / 5.0) < 1e-14);
    CHECK(rel_err(pythagorean.mean[1], 16.0 / 5.0) < 1e-14);

    // n = 2 coordinate 1 agrees with the bivariate closed form
    const auto biv = bivariate_law(3.0, 4.0, 5.0);
    CHECK(rel_err(pythagorean.mean[0], biv.mean) < 1e-14);
    CHECK(rel_err(pythagorean.covariance(0, 0), biv.sd * biv.sd) < 1e-14);
}

TEST_CASE("lifted law moments equal the dense oracle on all n coordinates") {
    TestRng rng(5150);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 20));
        std::vector<double> wv(n);
        for (auto& v : wv) v = rng.signed_uniform(0.1, 10.0);
        const WeightVector w(wv);
        const double c = rng.uniform(-10.0, 10.0);
        const auto law = condition_on_weighted_sum(w, c);
        const auto lifted = lift_law_moments(law, Space::X);
        const auto oracle = dense_conditioning_oracle(w, c);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(lifted.mean[i] - oracle.mean[i]) <
                  1e-10 * std::max(1.0, std::abs(oracle.mean[i])));
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(std::abs(lifted.covariance(i, j) - oracle.covariance(i, j)) <
                      1e-10 * std::max(1.0, std::abs(oracle.covariance(i, j))));
            }
        }
    }
}

TEST_CASE("slice oracle estimates the symmetric law") {
    const WeightVector w({1.0, 1.0});
    const auto emp = slice_oracle(w, 0.0, 0.01, 1000000, 314159);
    REQUIRE(emp.count > 100);
    const double se = std::sqrt(emp.covariance(0, 0) / static_cast<double>(emp.count));
    CHECK(std::abs(emp.mean[0]) < 4.0 * se);

    // acceptance close to the 2 eps phi(c; 0, ||w||) model
    const double observed =
        static_cast<double>(emp.count) / static_cast<double>(emp.proposals);
    const double expected = slice_acceptance_estimate(w, 0.0, 0.01);
    CHECK(observed / expected > 0.8);
    CHECK(observed / expected < 1.2);

    // halving epsilon roughly halves the acceptance count
    const auto emp_half = slice_oracle(w, 0.0, 0.005, 1000000, 314159);
    const double ratio =
        static_cast<double>(emp_half.count) / static_cast<double>(emp.count);
    CHECK(ratio > 0.4);
    CHECK(ratio < 0.6);
}

TEST_CASE("slice oracle agrees with the analytic Z-space law") {
    const WeightVector w({1.0, 2.0, 3.0});
    const auto law = condition_on_weighted_sum(w, 6.0);
    const auto emp = slice_oracle(w, 6.0, 0.05, 2000000, 99);
    const auto report = compare(law, emp, Space::Z);
    CHECK(report.pass);
    CHECK(report.count == emp.count);
    CHECK(report.band == 0.05);
}

TEST_CASE("slice oracle rejects unusable configurations") {
    const WeightVector w({1.0, 1.0});
    CHECK_THROWS_AS(slice_oracle(w, 0.0, -1.0, 1000000, 1), Error);
    CHECK_THROWS_AS(slice_oracle(w, 0.0, 0.01, 9999, 1), Error);
    // a constraint 8.5 standard deviations out accepts essentially nothing
    CHECK_THROWS_AS(slice_oracle(w, 12.0, 1e-4, 10000, 1), TooFewAccepted);
}

TEST_CASE("slice oracle is deterministic for a fixed seed") {
    const WeightVector w({1.0, 2.0, 3.0});
    const auto a = slice_oracle(w, 6.0, 0.1, 200000, 7);
    const auto b = slice_oracle(w, 6.0, 0.1, 200000, 7);
    CHECK(a.count == b.count);
    CHECK(a.mean == b.mean);
    CHECK(a.covariance == b.covariance);
}

TEST_CASE("comparison z-scores behave at the edges") {
    const auto law = condition_on_weighted_sum(WeightVector({1.0, 1.0}), 0.0, 1);

    SUBCASE("zero discrepancy gives zero z-scores") {
        EmpiricalMoments emp;
        emp.mean = law.mean();
        emp.covariance = law.covariance();
        emp.count = 1000;
        GaussianMoments analytic{law.mean(), law.covariance()};
        const auto report = compare(analytic, emp);
        CHECK(report.pass);
        CHECK(report.max_abs_mean_z == 0.0);
        CHECK(report.max_abs_cov_z == 0.0);
    }
    SUBCASE("exact-sampler batch passes against its own law") {
        const auto stats = sample_stats(Method::exact, law, 100000, 21, Space::Z);
        CHECK(compare(law, empirical_from(stats.moments), Space::Z).pass);
    }
    SUBCASE("last-coordinate batch fails on the variance") {
        const auto stats = sample_stats(Method::naive_last_coord, law, 100000, 21, Space::Z);
        const auto report = compare(law, empirical_from(stats.moments), Space::Z);
        CHECK_FALSE(report.pass);
        CHECK(report.max_abs_cov_z > 6.0);
    }
    SUBCASE("dimension and sample-count preconditions") {
        EmpiricalMoments emp;
        emp.mean = {0.0, 0.0};
        emp.covariance = Matrix(2, 2);
        emp.count = 1000;
        GaussianMoments analytic{law.mean(), law.covariance()};
        CHECK_THROWS_AS(compare(analytic, emp), DimensionMismatch);
        EmpiricalMoments tiny;
        tiny.mean = law.mean();
        tiny.covariance = law.covariance();
        tiny.count = 1;
        CHECK_THROWS_AS(compare(analytic, tiny), InsufficientSamples);
    }
}

TEST_CASE("band bias is directionally visible: wide bands hurt more") {
    // Small ||w|| makes the O(eps^2) covariance bias large relative to noise.
    const WeightVector w({0.1, 0.1});
    const auto analytic = to_z_space(dense_conditioning_oracle(w, 0.0), w);
    double wide_error = 0.0;
    double narrow_error = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto wide = slice_oracle(w, 0.0, 0.1, 40000, seed);
        const auto narrow = slice_oracle(w, 0.0, 0.01, 400000, seed);
        double werr = 0.0, nerr = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                werr = std::max(werr,
                                std::abs(wide.covariance(i, j) - analytic.covariance(i, j)));
                nerr = std::max(nerr, std::abs(narrow.covariance(i, j) -
                                               analytic.covariance(i, j)));
            }
        }
        wide_error += werr;
        narrow_error += nerr;
    }
    CHECK(wide_error / 10.0 > narrow_error / 10.0);
}

TEST_CASE("moment restriction and rescaling helpers") {
    const WeightVector w({1.0, 2.0, 3.0});
    const auto x = dense_conditioning_oracle(w, 6.0);
    const auto z = to_z_space(x, w);
    CHECK(rel_err(z.mean[1], 6.0 / 7.0) < 1e-14);
    CHECK(rel_err(z.covariance(1, 1), 5.0 / 7.0) < 1e-14);

    const std::vector<std::size_t> keep{0, 2};
    const auto r = restrict_moments(x, keep);
    CHECK(r.mean.size() == 2);
    CHECK(r.mean[1] == x.mean[2]);
    CHECK(r.covariance(0, 1) == x.covariance(0, 2));
}

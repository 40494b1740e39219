#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cgauss/conditional_law.hpp"
#include "cgauss/errors.hpp"
#include "cgauss/verifier.hpp"
#include "test_support.hpp"

using namespace cgauss;
using test_support::rel_err;
using test_support::TestRng;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

WeightVector random_weights(TestRng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& v : w) v = rng.signed_uniform(1e-2, 1e2);
    return WeightVector(std::move(w));
}

}  // namespace

TEST_CASE("weight validation names the offending coordinate") {
    CHECK_THROWS_AS(WeightVector({1.0}), Error);
    CHECK_THROWS_WITH_AS(WeightVector({1.0, 0.0, 3.0}), "weight 2 is zero", ZeroWeight);
    CHECK_THROWS_AS(WeightVector({1.0, std::numeric_limits<double>::infinity()}), Error);
}

TEST_CASE("pinned conditional laws") {
    SUBCASE("equal weights, n = 2") {
        const auto law = condition_on_weighted_sum(WeightVector({1.0, 1.0}), 0.0, 1);
        REQUIRE(law.dim() == 1);
        CHECK(law.mean()[0] == 0.0);
        CHECK(rel_err(law.covariance()(0, 0), 0.5) < 1e-14);
        CHECK(rel_err(law.precision().dense()(0, 0), 2.0) < 1e-14);
    }
    SUBCASE("exchangeable weights, n = 3") {
        const auto law = condition_on_weighted_sum(WeightVector({1.0, 1.0, 1.0}), 3.0, 2);
        REQUIRE(law.dim() == 2);
        CHECK(rel_err(law.mean()[0], 1.0) < 1e-14);
        CHECK(rel_err(law.mean()[1], 1.0) < 1e-14);
        CHECK(rel_err(law.covariance()(0, 0), 2.0 / 3.0) < 1e-14);
        CHECK(rel_err(law.covariance()(0, 1), -1.0 / 3.0) < 1e-14);
        CHECK(rel_err(law.covariance()(1, 1), 2.0 / 3.0) < 1e-14);
    }
    SUBCASE("generic weights") {
        const auto law = condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 6.0, 2);
        CHECK(rel_err(law.mean()[0], 3.0 / 7.0) < 1e-14);
        CHECK(rel_err(law.mean()[1], 12.0 / 7.0) < 1e-14);
        CHECK(rel_err(law.covariance()(0, 0), 13.0 / 14.0) < 1e-14);
        CHECK(rel_err(law.covariance()(0, 1), -2.0 / 7.0) < 1e-14);
        CHECK(rel_err(law.covariance()(1, 1), 20.0 / 7.0) < 1e-14);
        // precision keeps the diagonal-plus-constant structure 1/w_i^2, 1/w_p^2
        CHECK(rel_err(law.precision().a0(), 1.0 / 9.0) < 1e-14);
        CHECK(rel_err(law.precision().diag()[0], 1.0) < 1e-14);
        CHECK(rel_err(law.precision().diag()[1], 1.0 / 4.0) < 1e-14);
    }
}

TEST_CASE("default pivot is the largest weight, ties to the later coordinate") {
    CHECK(condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 0.0).pivot() == 2);
    CHECK(condition_on_weighted_sum(WeightVector({5.0, -2.0}), 0.0).pivot() == 0);
    CHECK(condition_on_weighted_sum(WeightVector({2.0, 2.0}), 0.0).pivot() == 1);
    CHECK_THROWS_AS(condition_on_weighted_sum(WeightVector({1.0, 1.0}), 0.0, 2), BadPivot);
}

TEST_CASE("dimensions beyond the dense covariance cap are rejected") {
    const WeightVector w({1.0, 2.0, 3.0, 4.0});
    CHECK_THROWS_AS(condition_on_weighted_sum(w, 0.0, std::nullopt, 2), Error);
    CHECK_NOTHROW(condition_on_weighted_sum(w, 0.0, std::nullopt, 3));
}

TEST_CASE("marginal sum density") {
    CHECK(rel_err(marginal_sum_density(WeightVector({1.0, 1.0}), 0.0),
                  1.0 / std::sqrt(4.0 * std::numbers::pi)) < 1e-14);
    CHECK(rel_err(marginal_sum_density(WeightVector({1.0, 2.0, 3.0}), 0.0),
                  1.0 / std::sqrt(28.0 * std::numbers::pi)) < 1e-14);
    CHECK(rel_err(marginal_sum_density(WeightVector({3.0, 4.0}), 5.0),
                  std::exp(-0.5) / (5.0 * std::sqrt(kTwoPi))) < 1e-14);
}

TEST_CASE("log density at pinned points") {
    const auto law2 = condition_on_weighted_sum(WeightVector({1.0, 1.0}), 0.0, 1);
    const std::vector<double> zero{0.0};
    CHECK(rel_err(log_density(law2, zero), -0.5 * std::log(std::numbers::pi)) < 1e-14);

    const auto law3 = condition_on_weighted_sum(WeightVector({1.0, 1.0, 1.0}), 3.0, 2);
    const std::vector<double> at_mean{1.0, 1.0};
    CHECK(rel_err(log_density(law3, at_mean), -0.5 * std::log(kTwoPi * kTwoPi / 3.0)) < 1e-13);

    const auto law = condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 6.0, 2);
    const std::vector<double> origin{0.0, 0.0};
    CHECK(rel_err(log_density(law, origin), law.log_norm_const() - 0.5 * 10.0 / 7.0) < 1e-13);
    // cross-check the structured quadratic form against the dense precision
    const Matrix prec = law.precision().dense();
    const std::vector<double> dev{-3.0 / 7.0, -12.0 / 7.0};
    const auto pv = test_support::dense_matvec(prec, dev);
    CHECK(rel_err(mahalanobis_sq(law, origin), dev[0] * pv[0] + dev[1] * pv[1]) < 1e-13);

    const std::vector<double> wrong{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(log_density(law, wrong), DimensionMismatch);
}

TEST_CASE("density self-consistency at pinned points") {
    const auto check_point = [](const ConditionalGaussian& law, std::vector<double> x) {
        const auto [closed, bayes] = density_self_consistency(law, x);
        CHECK(std::abs(closed - bayes) < 1e-10);
    };
    check_point(condition_on_weighted_sum(WeightVector({1.0, 1.0}), 0.0, 1), {0.3});
    check_point(condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 6.0, 2), {0.5, -1.0});
    check_point(condition_on_weighted_sum(WeightVector({2.0, 2.0}), 4.0, 1), {1.0});
}

TEST_CASE("density self-consistency holds across random laws and points") {
    TestRng rng(7741);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 20));
        const auto w = random_weights(rng, n);
        const auto law = condition_on_weighted_sum(w, rng.uniform(-10.0, 10.0));
        std::vector<double> x(law.dim());
        for (int point = 0; point < 200; ++point) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double sd = std::sqrt(law.covariance()(k, k));
                x[k] = law.mean()[k] + 3.0 * sd * rng.uniform(-1.0, 1.0);
            }
            const auto [closed, bayes] = density_self_consistency(law, x);
            CHECK(std::abs(closed - bayes) < 1e-10);
        }
    }
}

TEST_CASE("bivariate closed form") {
    const auto sym = bivariate_law(1.0, 1.0, 0.0);
    CHECK(sym.mean == 0.0);
    CHECK(rel_err(sym.sd, std::sqrt(0.5)) < 1e-14);

    const auto split = bivariate_law(1.0, 1.0, 2.0);
    CHECK(rel_err(split.mean, 1.0) < 1e-14);
    CHECK(rel_err(split.sd, std::sqrt(0.5)) < 1e-14);

    const auto generic = bivariate_law(1.0, 2.0, 5.0);
    CHECK(rel_err(generic.mean, 1.0) < 1e-14);
    CHECK(rel_err(generic.sd, std::sqrt(4.0 / 5.0)) < 1e-14);

    CHECK_THROWS_AS(bivariate_law(0.0, 1.0, 1.0), ZeroWeight);
}

TEST_CASE("bivariate closed form equals the general law at n = 2") {
    TestRng rng(31337);
    for (int trial = 0; trial < 300; ++trial) {
        const double w1 = rng.signed_uniform(1e-2, 1e2);
        const double w2 = rng.signed_uniform(1e-2, 1e2);
        const double c = rng.uniform(-10.0, 10.0);
        const auto biv = bivariate_law(w1, w2, c);
        const auto law = condition_on_weighted_sum(WeightVector({w1, w2}), c, 1);
        CHECK(rel_err(biv.mean, law.mean()[0]) < 1e-12);
        CHECK(rel_err(biv.sd, std::sqrt(law.covariance()(0, 0))) < 1e-12);
    }
}

TEST_CASE("z-space law on pinned cases") {
    const auto law2 = condition_on_weighted_sum(WeightVector({1.0, 1.0}), 0.0, 1);
    const auto z2 = z_space_law(law2);
    CHECK(z2.mean[0] == 0.0);
    CHECK(rel_err(z2.covariance(0, 0), 0.5) < 1e-14);

    const auto law = condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 6.0, 2);
    const auto z = z_space_law(law);
    CHECK(rel_err(z.mean[0], 3.0 / 7.0) < 1e-14);
    CHECK(rel_err(z.mean[1], 6.0 / 7.0) < 1e-14);
    CHECK(rel_err(z.covariance(0, 0), 13.0 / 14.0) < 1e-14);
    CHECK(rel_err(z.covariance(0, 1), -1.0 / 7.0) < 1e-14);
    CHECK(rel_err(z.covariance(1, 1), 5.0 / 7.0) < 1e-14);

    const auto law22 = condition_on_weighted_sum(WeightVector({2.0, 2.0}), 4.0, 1);
    const auto z22 = z_space_law(law22);
    CHECK(rel_err(z22.mean[0], 1.0) < 1e-14);
    CHECK(rel_err(z22.covariance(0, 0), 0.5) < 1e-14);
}

TEST_CASE("lift restores the full point in original order") {
    const auto law2 = condition_on_weighted_sum(WeightVector({1.0, 1.0}), 1.0, 1);
    const std::vector<double> x2{0.25};
    const auto full2 = lift(law2, x2);
    CHECK(full2.coords == std::vector<double>{0.25, 0.75});
    CHECK(full2.space == Space::X);

    const auto law3 = condition_on_weighted_sum(WeightVector({1.0, 1.0, 1.0}), 3.0, 2);
    const std::vector<double> x3{1.0, 1.0};
    CHECK(lift(law3, x3).coords == std::vector<double>{1.0, 1.0, 1.0});

    // pivot in first position: retained coordinates are 2 and 3
    const auto lawp = condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 6.0, 0);
    CHECK(lawp.retained() == std::vector<std::size_t>{1, 2});
    const std::vector<double> xr{2.5, -0.5};
    const auto full = lift(lawp, xr);
    CHECK(full.coords[1] == 2.5);
    CHECK(full.coords[2] == -0.5);
    CHECK(std::abs(full.coords[0] + full.coords[1] + full.coords[2] - 6.0) < 1e-12);

    const std::vector<double> too_long{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(lift(lawp, too_long), DimensionMismatch);
}

TEST_CASE("closed forms match the dense conditioning oracle") {
    TestRng rng(880011);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 50));
        const auto w = random_weights(rng, n);
        const double c = rng.uniform(-10.0, 10.0);
        const auto law = condition_on_weighted_sum(w, c);
        const auto oracle =
            restrict_moments(dense_conditioning_oracle(w, c), law.retained());
        for (std::size_t k = 0; k < law.dim(); ++k) {
            CHECK(rel_err(law.mean()[k], oracle.mean[k]) < 1e-10);
            for (std::size_t l = 0; l < law.dim(); ++l) {
                CHECK(rel_err(law.covariance()(k, l), oracle.covariance(k, l)) < 1e-10);
            }
        }
    }
}

TEST_CASE("precision and covariance are numerical inverses") {
    TestRng rng(4242);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 30));
        const auto law = condition_on_weighted_sum(random_weights(rng, n), rng.uniform(-10.0, 10.0));
        const Matrix prod =
            test_support::dense_matmul(law.precision().dense(), law.covariance());
        CHECK(test_support::max_abs_diff_from_identity(prod) < 1e-10);
    }
}

TEST_CASE("normalization constant matches 1/sqrt((2 pi)^(n-1) |Sigma|)") {
    TestRng rng(616);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 50));
        const auto law = condition_on_weighted_sum(random_weights(rng, n), rng.uniform(-10.0, 10.0));
        const double log_det_sigma = -log_determinant(law.precision());
        const double mismatch = law.log_norm_const() +
                                0.5 * (static_cast<double>(law.dim()) * std::log(kTwoPi) +
                                       log_det_sigma);
        CHECK(std::abs(std::expm1(mismatch)) < 1e-10);
    }
}

TEST_CASE("the implied full-space law does not depend on the pivot") {
    TestRng rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 12));
        const auto w = random_weights(rng, n);
        const double c = rng.uniform(-10.0, 10.0);
        const auto a = lift_law_moments(condition_on_weighted_sum(w, c, 0), Space::Z);
        const auto b = lift_law_moments(
            condition_on_weighted_sum(w, c, n - 1), Space::Z);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(a.mean[i] - b.mean[i]) < 1e-10);
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(std::abs(a.covariance(i, j) - b.covariance(i, j)) < 1e-10);
            }
        }
    }
}

TEST_CASE("sign flips move the Z-space mean, never the X-space covariance") {
    const WeightVector w({1.5, -2.5, 0.5});
    const WeightVector flipped({1.5, 2.5, 0.5});
    // retained coordinates are 2 and 3; the flip happens in coordinate 2
    const auto law = condition_on_weighted_sum(w, 3.0, 0);
    const auto law_flipped = condition_on_weighted_sum(flipped, 3.0, 0);

    CHECK(law.covariance() == law_flipped.covariance());

    const auto z = z_space_law(law);
    const auto zf = z_space_law(law_flipped);
    CHECK(z.mean[0] == -zf.mean[0]);
    CHECK(z.mean[1] == zf.mean[1]);
}

TEST_CASE("covariance ignores the constraint value") {
    const WeightVector w({1.0, 2.0, 3.0});
    const auto a = condition_on_weighted_sum(w, -7.5, 2);
    const auto b = condition_on_weighted_sum(w, 123.0, 2);
    CHECK(a.covariance() == b.covariance());
    CHECK(a.precision().dense() == b.precision().dense());
    CHECK(a.log_norm_const() == b.log_norm_const());
}

TEST_CASE("density integrates to one over an 8-sigma box at n = 3") {
    const auto law = condition_on_weighted_sum(WeightVector({1.0, 2.0, 3.0}), 6.0, 2);
    const std::size_t grid = 501;
    std::vector<double> lo(2), step(2);
    for (std::size_t k = 0; k < 2; ++k) {
        const double sd = std::sqrt(law.covariance()(k, k));
        lo[k] = law.mean()[k] - 8.0 * sd;
        step[k] = 16.0 * sd / static_cast<double>(grid - 1);
    }
    double integral = 0.0;
    std::vector<double> x(2);
    for (std::size_t i = 0; i < grid; ++i) {
        x[0] = lo[0] + step[0] * static_cast<double>(i);
        const double wi = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
        for (std::size_t j = 0; j < grid; ++j) {
            x[1] = lo[1] + step[1] * static_cast<double>(j);
            const double wj = (j == 0 || j == grid - 1) ? 0.5 : 1.0;
            integral += wi * wj * std::exp(log_density(law, x));
        }
    }
    integral *= step[0] * step[1];
    CHECK(std::abs(integral - 1.0) < 1e-6);
}

#include "cgauss/json_io.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cgauss/errors.hpp"

namespace cgauss {

namespace {

json matrix_rows(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

bool close(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= 1e-12 * scale;
}

}  // namespace

json law_to_json(const ConditionalGaussian& law) {
    json doc;
    doc["weights"] = law.weights().values();
    doc["c"] = law.c();
    doc["pivot"] = law.pivot() + 1;
    doc["mu"] = law.mean();
    doc["sigma"] = matrix_rows(law.covariance());
    doc["precision"] = {{"a0", law.precision().a0()}, {"diag", law.precision().diag()}};
    doc["log_norm_const"] = law.log_norm_const();
    return doc;
}

ConditionalGaussian law_from_json(const json& doc) {
    try {
        const auto weights = doc.at("weights").get<std::vector<double>>();
        const double c = doc.at("c").get<double>();
        const auto pivot_1based = doc.at("pivot").get<std::size_t>();
        if (pivot_1based < 1 || pivot_1based > weights.size()) {
            throw Error("pivot " + std::to_string(pivot_1based) + " out of range");
        }
        ConditionalGaussian law =
            condition_on_weighted_sum(WeightVector(weights), c, pivot_1based - 1);

        const auto mu = doc.at("mu").get<std::vector<double>>();
        const auto sigma = doc.at("sigma");
        const double log_norm = doc.at("log_norm_const").get<double>();
        if (mu.size() != law.dim() || sigma.size() != law.dim()) {
            throw Error("law document has inconsistent dimensions");
        }
        bool consistent = close(log_norm, law.log_norm_const());
        for (std::size_t k = 0; k < law.dim() && consistent; ++k) {
            consistent = close(mu[k], law.mean()[k]);
            const auto& row = sigma.at(k);
            for (std::size_t l = 0; l < law.dim() && consistent; ++l) {
                consistent = close(row.at(l).get<double>(), law.covariance()(k, l));
            }
        }
        if (!consistent) {
            throw Error("law document fields disagree with its parameters");
        }
        return law;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed law document: ") + e.what());
    }
}

json report_to_json(const VerificationReport& report) {
    json doc;
    doc["count"] = report.count;
    doc["proposals"] = report.proposals;
    doc["epsilon"] = report.band;
    doc["seed"] = report.seed;
    doc["z_mean"] = report.mean_z;
    doc["z_cov"] = matrix_rows(report.cov_z);
    doc["max_abs_z_mean"] = report.max_abs_mean_z;
    doc["max_abs_z_cov"] = report.max_abs_cov_z;
    doc["thresholds"] = {{"mean", report.z_mean_threshold}, {"cov", report.z_cov_threshold}};
    doc["pass"] = report.pass;
    return doc;
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace cgauss

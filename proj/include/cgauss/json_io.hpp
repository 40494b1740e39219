#pragma once

#include <string>

#include "json.hpp"

#include "cgauss/conditional_law.hpp"
#include "cgauss/verifier.hpp"

namespace cgauss {

using json = nlohmann::ordered_json;

// Law document: weights, c, pivot (1-based), mu, sigma (rows in row-major
// order), precision {a0, diag}, log_norm_const.
json law_to_json(const ConditionalGaussian& law);

// Rebuilds the law from (weights, c, pivot) and checks the stored derived
// fields against the reconstruction; throws Error on malformed or
// inconsistent documents.
ConditionalGaussian law_from_json(const json& doc);

json report_to_json(const VerificationReport& report);

// Canonical dump: two-space indent plus trailing newline. Non-finite
// numbers serialize as null.
std::string dump_json(const json& doc);

}  // namespace cgauss

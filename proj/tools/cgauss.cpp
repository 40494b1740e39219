// cgauss: compute, sample and verify the conditional law of an i.i.d.
// standard Normal vector under a weighted-sum constraint w'Z = c.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cgauss/conditional_law.hpp"
#include "cgauss/errors.hpp"
#include "cgauss/json_io.hpp"
#include "cgauss/rng.hpp"
#include "cgauss/sampler.hpp"
#include "cgauss/structured_matrix.hpp"
#include "cgauss/verifier.hpp"

namespace {

using cgauss::json;

// Locale-independent float parsing (dot decimal separator only).
double parse_double(const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw cgauss::Error("cannot parse number '" + text + "'");
    }
    return value;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t stop = comma == std::string::npos ? text.size() : comma;
        values.push_back(parse_double(text.substr(start, stop - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void write_text(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw cgauss::Error("cannot open " + path);
    f << text;
    if (!f) throw cgauss::Error("write failed: " + path);
}

cgauss::Method parse_method(const std::string& name) {
    if (name == "exact") return cgauss::Method::exact;
    if (name == "last-coord") return cgauss::Method::naive_last_coord;
    if (name == "rescale") return cgauss::Method::naive_rescale;
    if (name == "shift") return cgauss::Method::naive_shift;
    throw cgauss::Error("unknown method '" + name + "'");
}

std::optional<std::size_t> pivot_from_flag(int pivot_1based) {
    if (pivot_1based == 0) return std::nullopt;
    if (pivot_1based < 1) throw cgauss::BadPivot("pivot must be at least 1");
    return static_cast<std::size_t>(pivot_1based - 1);
}

struct LawArgs {
    std::string weights;
    std::string c;
    int pivot = 0;  // 1-based; 0 = choose automatically
    std::string output;
};

int run_law(const LawArgs& args) {
    const cgauss::WeightVector w(parse_double_list(args.weights));
    const auto law = cgauss::condition_on_weighted_sum(w, parse_double(args.c),
                                                       pivot_from_flag(args.pivot));
    write_text(cgauss::dump_json(cgauss::law_to_json(law)), args.output);
    return 0;
}

struct SampleArgs {
    std::string weights;
    std::string c;
    int pivot = 0;
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string method = "exact";
    std::string space = "z";
    std::string format = "csv";
    std::string output;
};

int run_sample(const SampleArgs& args) {
    const cgauss::WeightVector w(parse_double_list(args.weights));
    const double c = parse_double(args.c);
    const auto law = cgauss::condition_on_weighted_sum(w, c, pivot_from_flag(args.pivot));
    const auto method = parse_method(args.method);
    if (args.space != "x" && args.space != "z") {
        throw cgauss::Error("unknown space '" + args.space + "' (use x or z)");
    }
    const auto space = args.space == "x" ? cgauss::Space::X : cgauss::Space::Z;
    const std::uint64_t seed = args.seed_given ? args.seed : entropy_seed();

    std::cerr << "seed: " << seed << "\n";
    std::cerr << "generator: " << cgauss::NormalRng::kGeneratorId << "\n";
    if (method == cgauss::Method::naive_rescale && c == 0.0) {
        std::cerr << "warning: rescale with c = 0 is degenerate; every sample collapses"
                     " to the zero vector\n";
    }

    cgauss::ExportSummary summary;
    if (args.format == "binary") {
        if (args.output.empty()) {
            throw cgauss::Error("binary output needs --output");
        }
        summary = cgauss::export_binary(method, law, args.count, seed, space, args.output);
    } else if (args.format == "csv") {
        if (args.output.empty()) {
            summary = cgauss::export_csv(method, law, args.count, seed, space, std::cout);
        } else {
            std::ofstream f(args.output, std::ios::trunc);
            if (!f) throw cgauss::Error("cannot open " + args.output);
            summary = cgauss::export_csv(method, law, args.count, seed, space, f);
        }
    } else {
        throw cgauss::Error("unknown format '" + args.format + "'");
    }

    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", summary.max_abs_residual);
    std::cerr << "max constraint residual: " << buf << "\n";
    if (summary.degenerate_redraws > 0) {
        std::cerr << "rescale redraws due to |w'Z| < 1e-30: " << summary.degenerate_redraws
                  << "\n";
    }
    return 0;
}

struct VerifyArgs {
    std::string weights;
    std::string c;
    int pivot = 0;
    std::string method = "slice";
    std::uint64_t proposals = 10000000;
    std::uint64_t samples = 1000000;
    std::string epsilon;  // empty = 0.02 * ||w||
    std::uint64_t seed = 0;
    bool seed_given = false;
    double z_mean = 5.0;
    double z_cov = 6.0;
    std::string output;
};

int run_verify(const VerifyArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const cgauss::WeightVector w(parse_double_list(args.weights));
    const double c = parse_double(args.c);
    const auto law = cgauss::condition_on_weighted_sum(w, c, pivot_from_flag(args.pivot));
    const std::uint64_t seed = args.seed_given ? args.seed : entropy_seed();
    std::cerr << "seed: " << seed << "\n";

    // deterministic route: the dense conditioning oracle against the closed forms
    const auto oracle =
        cgauss::restrict_moments(cgauss::dense_conditioning_oracle(w, c), law.retained());
    double max_rel = 0.0;
    const auto rel = [](double a, double b) {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
    };
    for (std::size_t k = 0; k < law.dim(); ++k) {
        max_rel = std::max(max_rel, rel(law.mean()[k], oracle.mean[k]));
        for (std::size_t l = 0; l < law.dim(); ++l) {
            max_rel = std::max(max_rel, rel(law.covariance()(k, l), oracle.covariance(k, l)));
        }
    }
    const bool oracle_pass = max_rel <= 1e-10;

    // statistical route, in Z-space
    json statistical;
    bool statistical_pass = false;
    if (args.method == "slice") {
        const double epsilon = args.epsilon.empty() ? 0.02 * std::sqrt(w.norm_sq())
                                                    : parse_double(args.epsilon);
        const auto emp = cgauss::slice_oracle(w, c, epsilon, args.proposals, seed);
        auto report = cgauss::compare(law, emp, cgauss::Space::Z, args.z_mean, args.z_cov);
        report.seed = seed;
        statistical = cgauss::report_to_json(report);
        statistical["acceptance"] = {
            {"observed", static_cast<double>(emp.count) / static_cast<double>(emp.proposals)},
            {"expected", cgauss::slice_acceptance_estimate(w, c, epsilon)}};
        statistical_pass = report.pass;
    } else {
        const auto method = parse_method(args.method);
        const auto stats =
            cgauss::sample_stats(method, law, args.samples, seed, cgauss::Space::Z);
        auto report = cgauss::compare(law, cgauss::empirical_from(stats.moments),
                                      cgauss::Space::Z, args.z_mean, args.z_cov);
        report.seed = seed;
        statistical = cgauss::report_to_json(report);
        statistical["max_abs_residual"] = stats.max_abs_residual;
        statistical_pass = report.pass;
    }

    json doc;
    doc["weights"] = w.values();
    doc["c"] = c;
    doc["pivot"] = law.pivot() + 1;
    doc["method"] = args.method;
    doc["space"] = "z";
    doc["seed"] = seed;
    doc["dense_oracle"] = {{"max_rel_error", max_rel},
                           {"tolerance", 1e-10},
                           {"pass", oracle_pass}};
    doc["statistical"] = statistical;
    doc["pass"] = oracle_pass && statistical_pass;
    write_text(cgauss::dump_json(doc), args.output);

    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    std::cerr << "wall time: " << elapsed.count() << " s\n";
    return oracle_pass && statistical_pass ? 0 : 3;
}

struct LemmaArgs {
    std::string a0;
    std::string diag;
    std::string output;
};

int run_lemma(const LemmaArgs& args) {
    const double a0 = parse_double(args.a0);
    const std::vector<double> diag = parse_double_list(args.diag);
    if (!cgauss::is_positive_definite(a0, diag)) {
        throw cgauss::NonPositiveEntry(
            "every entry must be positive and finite (a0 and the diagonal)");
    }
    const cgauss::DiagPlusConstantMatrix a(a0, diag);
    const auto inv = cgauss::inverse(a);

    json doc;
    doc["a0"] = a0;
    doc["diag"] = diag;
    doc["m"] = a.dim();
    doc["positive_definite"] = true;
    doc["log_determinant"] = cgauss::log_determinant(a);
    doc["log_determinant_recursive"] = cgauss::log_determinant_recursive(a);
    doc["determinant"] = cgauss::determinant(a);
    doc["recip_sum"] = a.recip_sum();
    json rows = json::array();
    for (std::size_t i = 0; i < a.dim(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < a.dim(); ++j) row.push_back(inv.entry(i, j));
        rows.push_back(std::move(row));
    }
    doc["inverse"] = rows;
    write_text(cgauss::dump_json(doc), args.output);
    return 0;
}

struct DemoArgs {
    std::string loadings;
    std::string thresholds;
    int observed = 1;  // 1-based obligor index
    std::string boundary;  // default: the observed obligor's threshold
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string output;
};

int run_demo_credit(const DemoArgs& args) {
    const std::vector<double> loadings = parse_double_list(args.loadings);
    const std::vector<double> thresholds = parse_double_list(args.thresholds);
    if (loadings.size() != thresholds.size() || loadings.empty()) {
        throw cgauss::Error("loadings and thresholds must be nonempty lists of equal length");
    }
    for (std::size_t i = 0; i < loadings.size(); ++i) {
        if (!(std::abs(loadings[i]) < 1.0)) {
            throw cgauss::Error("loading " + std::to_string(i + 1) +
                                " must lie strictly inside (-1, 1)");
        }
    }
    if (args.observed < 1 || static_cast<std::size_t>(args.observed) > loadings.size()) {
        throw cgauss::Error("observed obligor index out of range");
    }
    const std::size_t k = static_cast<std::size_t>(args.observed - 1);
    const double rho = loadings[k];
    const double boundary =
        args.boundary.empty() ? thresholds[k] : parse_double(args.boundary);
    const std::uint64_t seed = args.seed_given ? args.seed : entropy_seed();
    std::cerr << "seed: " << seed << "\n";

    // Creditworthiness X_k = rho Y + sqrt(1 - rho^2) eps_k; the observation
    // X_k = boundary is the two-variable weighted-sum constraint over
    // (Y, eps_k). A zero loading decouples Y entirely.
    double factor_mean = 0.0;
    double factor_var = 1.0;
    double mc_mean = 0.0;
    double mc_var = 0.0;
    if (rho != 0.0) {
        const cgauss::WeightVector w({rho, std::sqrt(1.0 - rho * rho)});
        const auto law = cgauss::condition_on_weighted_sum(w, boundary, 1);
        const auto z = cgauss::z_space_law(law);
        factor_mean = z.mean[0];
        factor_var = z.covariance(0, 0);
        const auto stats =
            cgauss::sample_stats(cgauss::Method::exact, law, args.samples, seed, cgauss::Space::Z);
        const auto emp = cgauss::empirical_from(stats.moments);
        mc_mean = emp.mean[0];
        mc_var = emp.covariance(0, 0);
    } else {
        cgauss::NormalRng rng(seed);
        double sum = 0.0, sum_sq = 0.0;
        for (std::uint64_t i = 0; i < args.samples; ++i) {
            const double y = rng.normal();
            sum += y;
            sum_sq += y * y;
        }
        const double n = static_cast<double>(args.samples);
        mc_mean = sum / n;
        mc_var = (sum_sq - n * mc_mean * mc_mean) / (n - 1.0);
    }
    const double se = std::sqrt(mc_var / static_cast<double>(args.samples));
    const double z_score = se > 0.0 ? (mc_mean - factor_mean) / se : 0.0;
    const bool mc_pass = std::abs(z_score) <= 4.0;

    json obligors = json::array();
    for (std::size_t i = 0; i < loadings.size(); ++i) {
        json entry;
        entry["index"] = i + 1;
        entry["loading"] = loadings[i];
        entry["threshold"] = thresholds[i];
        entry["pd_unconditional"] = normal_cdf(thresholds[i]);
        if (i == k) {
            entry["pd_conditional"] = nullptr;  // state observed directly
        } else {
            const double denom =
                std::sqrt(loadings[i] * loadings[i] * factor_var + 1.0 -
                          loadings[i] * loadings[i]);
            entry["pd_conditional"] =
                normal_cdf((thresholds[i] - loadings[i] * factor_mean) / denom);
        }
        obligors.push_back(std::move(entry));
    }

    json doc;
    doc["observed"] = {{"index", k + 1}, {"loading", rho}, {"boundary", boundary}};
    doc["factor_law"] = {{"mean", factor_mean}, {"variance", factor_var}};
    doc["obligors"] = obligors;
    doc["mc_check"] = {{"samples", args.samples}, {"seed", seed},   {"mean", mc_mean},
                       {"variance", mc_var},      {"z", z_score},   {"pass", mc_pass}};
    write_text(cgauss::dump_json(doc), args.output);
    return mc_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional Gaussian toolkit: exact laws, samplers and verification for"
                 " weighted-sum constraints"};
    app.require_subcommand(1);

    LawArgs law_args;
    auto* law_cmd = app.add_subcommand("law", "compute the conditional law as JSON");
    law_cmd->add_option("--weights", law_args.weights, "comma-separated weights")->required();
    law_cmd->add_option("--c", law_args.c, "constraint value")->required();
    law_cmd->add_option("--pivot", law_args.pivot, "1-based coordinate to eliminate");
    law_cmd->add_option("--output,-o", law_args.output, "output path (default stdout)");

    SampleArgs sample_args;
    auto* sample_cmd = app.add_subcommand("sample", "draw constraint-satisfying samples");
    sample_cmd->add_option("--weights", sample_args.weights)->required();
    sample_cmd->add_option("--c", sample_args.c)->required();
    sample_cmd->add_option("--pivot", sample_args.pivot);
    sample_cmd->add_option("--count,-n", sample_args.count, "number of samples")->required();
    auto* sample_seed = sample_cmd->add_option("--seed", sample_args.seed);
    sample_cmd->add_option("--method", sample_args.method,
                           "exact | last-coord | rescale | shift");
    sample_cmd->add_option("--space", sample_args.space, "z | x coordinates");
    sample_cmd->add_option("--format", sample_args.format, "csv | binary");
    sample_cmd->add_option("--output,-o", sample_args.output);

    VerifyArgs verify_args;
    auto* verify_cmd =
        app.add_subcommand("verify", "check the law against independent oracles");
    verify_cmd->add_option("--weights", verify_args.weights)->required();
    verify_cmd->add_option("--c", verify_args.c)->required();
    verify_cmd->add_option("--pivot", verify_args.pivot);
    verify_cmd->add_option("--method", verify_args.method,
                           "slice | exact | last-coord | rescale | shift");
    verify_cmd->add_option("--proposals", verify_args.proposals);
    verify_cmd->add_option("--samples", verify_args.samples);
    verify_cmd->add_option("--epsilon", verify_args.epsilon,
                           "slice band (default 0.02 * ||w||)");
    auto* verify_seed = verify_cmd->add_option("--seed", verify_args.seed);
    verify_cmd->add_option("--z-mean", verify_args.z_mean);
    verify_cmd->add_option("--z-cov", verify_args.z_cov);
    verify_cmd->add_option("--output,-o", verify_args.output);

    LemmaArgs lemma_args;
    auto* lemma_cmd =
        app.add_subcommand("lemma", "determinant and inverse of a_i delta_ij + a0");
    lemma_cmd->add_option("--a0", lemma_args.a0)->required();
    lemma_cmd->add_option("--diag", lemma_args.diag, "comma-separated diagonal")->required();
    lemma_cmd->add_option("--output,-o", lemma_args.output);

    DemoArgs demo_args;
    auto* demo_cmd = app.add_subcommand(
        "demo-credit", "one-factor credit demo: condition the factor on one observed obligor");
    demo_cmd->add_option("--loadings", demo_args.loadings, "factor loadings in (-1,1)")
        ->required();
    demo_cmd->add_option("--thresholds", demo_args.thresholds, "default thresholds")
        ->required();
    demo_cmd->add_option("--observed", demo_args.observed, "1-based observed obligor")
        ->required();
    demo_cmd->add_option("--boundary", demo_args.boundary,
                         "observed value (default: the obligor's threshold)");
    demo_cmd->add_option("--samples", demo_args.samples);
    auto* demo_seed = demo_cmd->add_option("--seed", demo_args.seed);
    demo_cmd->add_option("--output,-o", demo_args.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    sample_args.seed_given = sample_seed->count() > 0;
    verify_args.seed_given = verify_seed->count() > 0;
    demo_args.seed_given = demo_seed->count() > 0;

    try {
        if (law_cmd->parsed()) return run_law(law_args);
        if (sample_cmd->parsed()) return run_sample(sample_args);
        if (verify_cmd->parsed()) return run_verify(verify_args);
        if (lemma_cmd->parsed()) return run_lemma(lemma_args);
        if (demo_cmd->parsed()) return run_demo_credit(demo_args);
    } catch (const cgauss::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

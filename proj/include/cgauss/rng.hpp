#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cgauss {

// SplitMix64 finalizer, used to spread seeds into independent substreams.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed of the RNG substream that drives block `stream` of a run keyed by
// `seed`. Blocks of fixed size are the unit of generation, so a run's
// output is a pure function of (seed, parameters) regardless of thread
// count or buffer sizes.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// Standard-Normal generator: mt19937_64 (the engine's output sequence is
// fixed by the C++ standard) with the Box-Muller transform on 53-bit
// uniforms. The id string is recorded in sample batches so a batch is
// reproducible from its metadata alone.
class NormalRng {
public:
    static constexpr const char* kGeneratorId = "mt19937_64/box-muller";

    explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]; keeps the log finite
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cgauss

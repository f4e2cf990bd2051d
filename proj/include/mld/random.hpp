#pragma once

#include <cstdint>
#include <random>

namespace mld {

/// What a substream is used for within one replicate.
enum class StreamPurpose : std::uint64_t {
    Assignment = 1,
    Randomization = 2,
    Contamination = 3,
    Responses = 4,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Value-semantic seeded generator. Substreams are keyed by
/// (master seed, replicate index, purpose) so that a replicate draws the
/// same numbers no matter which worker runs it.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

    static Rng substream(std::uint64_t master_seed, std::uint64_t replicate, StreamPurpose purpose) {
        std::uint64_t key = splitmix64(master_seed);
        key = splitmix64(key ^ replicate);
        key = splitmix64(key ^ (static_cast<std::uint64_t>(purpose) * 0xD1B54A32D192ED03ULL));
        return Rng(key);
    }

    engine_type& engine() { return engine_; }

    /// Uniform integer in [0, bound).
    int uniform_index(int bound) {
        return std::uniform_int_distribution<int>(0, bound - 1)(engine_);
    }
    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return std::bernoulli_distribution(p)(engine_);
    }
    double normal(double mean = 0.0, double sd = 1.0) {
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

private:
    engine_type engine_;
};

}  // namespace mld

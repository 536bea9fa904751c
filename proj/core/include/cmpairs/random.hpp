#pragma once

#include <cstdint>
#include <limits>

namespace cmpairs {

/// SplitMix64 output finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream key from a master seed and a stream index.
/// Used to split one user seed into per-replication, per-draw and per-purpose
/// substreams so that results do not depend on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64_mix(master ^ splitmix64_mix(stream + 0x632BE59BD9B4E019ULL));
}

/*
 * Counter-based generator: the i-th output of stream `key` is
 * splitmix64_mix(key + (i + 1) * 0x9E3779B97F4A7C15), i.e. SplitMix64 run in
 * counter mode. Any output can be recomputed from (key, i) alone, so streams
 * replay identically on every platform. All derived variates (uniforms,
 * integers, normals) use only integer arithmetic plus <cmath> log/sqrt/cos.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}
    constexpr CounterRng(std::uint64_t master, std::uint64_t stream) noexcept
        : key_(derive_seed(master, stream)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return splitmix64_mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept;
    /// Uniform on (0, 1]; safe as a log argument.
    double uniform_open0() noexcept;
    double uniform(double low, double high) noexcept;
    /// Unbiased integer on the closed range [low, high].
    std::int64_t uniform_int(std::int64_t low, std::int64_t high) noexcept;
    /// Fair coin.
    bool coin() noexcept { return ((*this)() >> 63) != 0; }
    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() noexcept;
    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace cmpairs

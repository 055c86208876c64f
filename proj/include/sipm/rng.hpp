#pragma once

#include <cstdint>

namespace sipm {

/// SplitMix64 finalizer. Used both for seeding and as the counter-based
/// generator core.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

/// Identifies one run's random stream: (seed, stream) fully determines
/// every draw of that run.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Counter-based per-run generator. Draws are pure functions of
/// (key, domain, index), so runs are reproducible and order-independent
/// across threads. The edge domain gives every directed lattice edge a
/// fixed uniform for the whole run, independent of how many sequential
/// draws were consumed; comparing the same edge uniform against two
/// thresholds couples runs across crosstalk probabilities.
class RunRng {
public:
    explicit RunRng(RngSeed s) noexcept
        : key_(mix64(s.seed + 0x9E3779B97F4A7C15ull * mix64(s.stream + 0x2545F4914F6CDD1Dull))) {}

    std::uint64_t next_u64() noexcept { return at(kSeqDomain, counter_++); }

    /// Uniform in [0, 1).
    double next_double() noexcept { return to_unit(next_u64()); }

    /// Uniform integer in [0, n). n up to ~2^32; modulo bias is negligible.
    std::uint64_t next_below(std::uint64_t n) noexcept { return next_u64() % n; }

    /// Fixed uniform attached to a directed lattice edge.
    double edge_uniform(std::uint64_t edge_index) const noexcept {
        return to_unit(at(kEdgeDomain, edge_index));
    }

private:
    static constexpr std::uint64_t kSeqDomain = 0x8BB84B93962EACC9ull;
    static constexpr std::uint64_t kEdgeDomain = 0xD1B54A32D192ED03ull;

    std::uint64_t at(std::uint64_t domain, std::uint64_t index) const noexcept {
        return mix64(key_ ^ mix64(domain + index * 0x9E3779B97F4A7C15ull));
    }

    static double to_unit(std::uint64_t x) noexcept {
        return static_cast<double>(x >> 11) * 0x1.0p-53;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace sipm

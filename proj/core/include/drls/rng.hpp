#pragma once

#include <cstdint>
#include <limits>

namespace drls {

/// Purpose tags for independent random substreams.
enum class Stream : std::uint64_t {
    process_noise = 1,
    measurement_noise = 2,
    uncertainty = 3,
    initial_estimate = 4,
    probe = 5,
};

/// Counter-based generator: every (seed, trial, node, step, purpose) tuple
/// names its own stream, so draws never depend on evaluation order or on the
/// thread that happens to run a trial. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t trial, std::uint64_t node, std::uint64_t step,
               Stream purpose) noexcept {
        key_ = mix(seed ^ 0x243f6a8885a308d3ULL);
        key_ = mix(key_ ^ trial);
        key_ = mix(key_ ^ (node + 0x13198a2e03707344ULL));
        key_ = mix(key_ ^ (step + 0xa4093822299f31d0ULL));
        key_ = mix(key_ ^ static_cast<std::uint64_t>(purpose));
    }

    result_type operator()() noexcept { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    // splitmix64 finalizer
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Identifies the random substream family of one trial.
struct SeedKey {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;

    [[nodiscard]] CounterRng stream(std::uint64_t node, std::uint64_t step, Stream purpose) const noexcept {
        return CounterRng(seed, trial, node, step, purpose);
    }
};

}  // namespace drls

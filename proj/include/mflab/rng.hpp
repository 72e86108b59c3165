#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mflab {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: the n-th output of the stream keyed by
/// (seed, ids...) is mix64(key + n * gamma). Every particle (or inner path)
/// owns its own stream, so results do not depend on scheduling.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept {
        std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc909ULL);
        for (auto id : ids) k = mix64(k ^ mix64(id + 0x3c6ef372fe94f82bULL));
        key_ = k;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(key_ + counter_);
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace mflab

// rng.hpp — counter-based random streams.
//
// Every output is a pure function of (seed, domain, stream, counter), so a
// trajectory's randomness depends only on its index, never on which worker
// thread produced it or in what order.  Domains separate unrelated uses of
// the same user seed (e.g. unbiased stage vs. biased estimate).

#pragma once

#include <cstdint>

namespace qtbias {

namespace detail {
// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t domain, std::uint64_t stream) {
        const std::uint64_t seeded =
            detail::mix64(seed + 0x9E3779B97F4A7C15ull * (domain + 1));
        key_ = detail::mix64(seeded + 0xBF58476D1CE4E5B9ull * stream);
    }

    std::uint64_t next_u64() {
        return detail::mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace qtbias

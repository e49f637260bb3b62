#pragma once

#include <cstdint>
#include <random>

#include "otfs/types.hpp"

namespace otfs {

using Rng = std::mt19937_64;

/// Independent stream for one Monte Carlo trial. Depends only on the pair,
/// so any trial can be replayed alone and results do not depend on which
/// worker ran it.
inline Rng trial_rng(std::uint64_t master_seed, std::uint64_t trial_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(trial_index), static_cast<std::uint32_t>(trial_index >> 32),
                      0x6f746673U};
    return Rng(seq);
}

/// Circularly-symmetric complex Gaussian sample with E|z|^2 = variance.
inline Complex complex_gaussian(Rng& rng, double variance) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline Bits random_bits(Rng& rng, std::size_t count) {
    Bits out(count);
    for (std::size_t i = 0; i < count; i += 64) {
        std::uint64_t word = rng();
        for (std::size_t b = i; b < std::min(count, i + 64); ++b, word >>= 1)
            out[b] = static_cast<std::uint8_t>(word & 1U);
    }
    return out;
}

}  // namespace otfs

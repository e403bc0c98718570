#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace treeinf {

// Seeded randomness helpers. All draws are derived from mt19937_64's
// standardized output stream, so results are identical across platforms
// and standard library implementations (std::uniform_*_distribution is
// not specified bit-exactly, so we do not use it).

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) via unbiased rejection sampling. n must be > 0.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
    return uniform_unit(rng) < p;
}

// Standard normal via Box-Muller.
inline double normal_draw(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform_unit(rng);  // (0, 1]
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Fisher-Yates shuffle.
template <class T>
void shuffle_values(std::mt19937_64& rng, std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::swap(values[i - 1], values[uniform_below(rng, i)]);
    }
}

// k distinct indices drawn uniformly from [0, population), returned sorted.
std::vector<std::int64_t> sample_without_replacement(std::mt19937_64& rng,
                                                     std::int64_t population,
                                                     std::int64_t k);

}  // namespace treeinf

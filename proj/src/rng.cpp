#include "treeinfluence/rng.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace treeinf {

std::vector<std::int64_t> sample_without_replacement(std::mt19937_64& rng,
                                                     std::int64_t population,
                                                     std::int64_t k) {
    if (k < 0 || k > population) {
        throw std::invalid_argument("sample_without_replacement: k out of range");
    }
    std::vector<std::int64_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::int64_t{0});
    // Partial Fisher-Yates: the first k slots hold the sample.
    for (std::int64_t i = 0; i < k; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(uniform_below(rng, population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace treeinf

#include "treeinfluence/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace treeinf {

double dcg(std::span<const double> gains_in_rank_order) {
    double total = 0.0;
    for (std::size_t r = 0; r < gains_in_rank_order.size(); ++r) {
        total += gains_in_rank_order[r] / std::log2(static_cast<double>(r) + 2.0);
    }
    return total;
}

double ndcg_at_k(std::span<const double> scores, std::span<const double> relevance, int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    if (scores.size() != relevance.size()) {
        throw std::invalid_argument("ndcg_at_k: scores and relevance sizes differ");
    }
    const int n = static_cast<int>(scores.size());
    if (n == 0) throw std::invalid_argument("ndcg_at_k: empty input");
    for (double r : relevance) {
        if (!(r >= 0.0)) throw std::invalid_argument("ndcg_at_k: relevance must be >= 0");
    }
    const int kk = std::min(k, n);

    std::vector<int> by_score(n);
    std::iota(by_score.begin(), by_score.end(), 0);
    std::stable_sort(by_score.begin(), by_score.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    std::vector<double> ideal(relevance.begin(), relevance.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    double top = 0.0, best = 0.0;
    for (int r = 0; r < kk; ++r) {
        const double discount = std::log2(static_cast<double>(r) + 2.0);
        top += relevance[by_score[r]] / discount;
        best += ideal[r] / discount;
    }
    return best > 0.0 ? top / best : 1.0;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("roc_auc: scores and labels sizes differ");
    }
    const std::int64_t n = static_cast<std::int64_t>(scores.size());
    std::int64_t positives = 0;
    for (std::uint8_t y : labels) positives += y ? 1 : 0;
    const std::int64_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("roc_auc: both classes must be present");
    }

    // Mann-Whitney with midranks for ties.
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::int64_t a, std::int64_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::int64_t i = 0;
    while (i < n) {
        std::int64_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j + 1);  // ranks are 1-based
        for (std::int64_t p = i; p < j; ++p) {
            if (labels[order[p]]) positive_rank_sum += midrank;
        }
        i = j;
    }
    const double u = positive_rank_sum -
                     0.5 * static_cast<double>(positives) * static_cast<double>(positives + 1);
    return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

}  // namespace treeinf

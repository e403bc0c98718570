#pragma once

#include <cstdint>
#include <span>

namespace treeinf {

// Sum of gain_r / log2(r + 1) with ranks starting at 1. Negative gains are
// allowed; the empty list scores 0.
double dcg(std::span<const double> gains_in_rank_order);

// DCG of the top-k items ordered by score, divided by the DCG of the top-k
// ideal (relevance-sorted) ordering; 1.0 when the ideal DCG is 0. Relevance
// must be non-negative. k is capped at the candidate count; score ties break
// to the lower index.
double ndcg_at_k(std::span<const double> scores, std::span<const double> relevance, int k);

// Probability that a uniformly random positive outranks a uniformly random
// negative; ties count one half. Both classes must be present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace treeinf

#pragma once

// Leave-one-out ranking metrics over (1 positive + sampled negatives) lists.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "unlearnrec/dataio.hpp"
#include "unlearnrec/recmodels.hpp"

namespace unlearnrec {

/// 1-based rank of the positive by descending score. Negatives that tie with
/// the positive are ranked ahead of it.
std::size_t rank_of_positive(double positive_score, std::span<const double> negative_scores);

/// Scores the candidate list of `tc` for `user` with the final embeddings.
/// Throws DataError on duplicate candidates.
std::size_t rank_of_positive(const FinalEmbeddings& emb, std::uint32_t user, const TestCase& tc);

struct RankingMetrics {
    double ndcg = 0.0;
    double hr = 0.0;
};

/// Means over users of hr = [rank <= K] and ndcg = [rank <= K] / log2(rank + 1).
RankingMetrics ndcg_hr_at_k(std::span<const std::size_t> ranks, std::size_t k);

struct RecReport {
    std::map<std::size_t, double> ndcg;
    std::map<std::size_t, double> hr;
    std::vector<std::size_t> per_user_ranks;

    bool operator==(const RecReport&) const = default;
};

RecReport evaluate_ranking(const FinalEmbeddings& emb, const EvalSplit& split,
                           std::span<const std::size_t> ks = std::vector<std::size_t>{5, 10});

}  // namespace unlearnrec

#include "unlearnrec/recmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unlearnrec/errors.hpp"

namespace unlearnrec {

std::size_t rank_of_positive(double positive_score, std::span<const double> negative_scores) {
    std::size_t ahead = 0;
    for (double s : negative_scores) {
        if (s >= positive_score) ++ahead;
    }
    return ahead + 1;
}

std::size_t rank_of_positive(const FinalEmbeddings& emb, std::uint32_t user, const TestCase& tc) {
    std::vector<std::uint32_t> candidates = tc.negatives;
    candidates.push_back(tc.positive);
    std::sort(candidates.begin(), candidates.end());
    if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end()) {
        throw DataError("duplicate candidate items for user " + std::to_string(user));
    }
    const auto u = emb.users.row(user);
    std::vector<double> neg_scores;
    neg_scores.reserve(tc.negatives.size());
    for (auto i : tc.negatives) neg_scores.push_back(u.dot(emb.items.row(i)));
    return rank_of_positive(u.dot(emb.items.row(tc.positive)), neg_scores);
}

RankingMetrics ndcg_hr_at_k(std::span<const std::size_t> ranks, std::size_t k) {
    if (ranks.empty()) throw DataError("ndcg_hr_at_k: empty rank list");
    if (k == 0) throw ConfigError("ndcg_hr_at_k: K must be >= 1");
    RankingMetrics m;
    for (auto r : ranks) {
        if (r == 0) throw DataError("ranks are 1-based");
        if (r <= k) {
            m.hr += 1.0;
            m.ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
        }
    }
    const auto n = static_cast<double>(ranks.size());
    m.hr /= n;
    m.ndcg /= n;
    return m;
}

RecReport evaluate_ranking(const FinalEmbeddings& emb, const EvalSplit& split, std::span<const std::size_t> ks) {
    RecReport report;
    report.per_user_ranks.reserve(split.test.size());
    for (std::size_t u = 0; u < split.test.size(); ++u) {
        report.per_user_ranks.push_back(rank_of_positive(emb, static_cast<std::uint32_t>(u), split.test[u]));
    }
    for (auto k : ks) {
        const auto m = ndcg_hr_at_k(report.per_user_ranks, k);
        report.ndcg[k] = m.ndcg;
        report.hr[k] = m.hr;
    }
    return report;
}

}  // namespace unlearnrec

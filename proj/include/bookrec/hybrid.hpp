#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "bookrec/common.hpp"
#include "bookrec/lfm.hpp"
#include "bookrec/similarity.hpp"

namespace bookrec {

struct HybridConfig {
    std::size_t neighborhood_size = 10;
    std::size_t top_n = 10;
    bool exclude_purchased = true;

    void validate() const {
        if (neighborhood_size < 1) throw ModelError("HybridConfig: neighborhood_size must be >= 1");
        if (top_n < 1) throw ModelError("HybridConfig: top_n must be >= 1");
    }
};

struct RatingPrediction {
    std::string customer_id;
    std::string book_id;
    double score = 0.0;
};

/// Predicted rating: with w = 1/(N+1) over the N neighbors,
/// sum_v w * sim(u,v) * r_vi + w * r_ui, so the weights sum to 1.
inline double hybrid_score(const std::string& customer_id, const std::string& book_id,
                           const std::vector<std::pair<std::string, double>>& neighbors,
                           const FactorModel& lfm) {
    double w = 1.0 / static_cast<double>(neighbors.size() + 1);
    double score = w * lfm.predict(customer_id, book_id).value;
    for (const auto& [vid, sim] : neighbors)
        score += w * sim * lfm.predict(vid, book_id).value;
    return score;
}

struct RecommendResult {
    std::vector<RatingPrediction> items;  // descending score, <= top_n
    bool cold = false;                    // customer unknown to both models
    bool empty_candidates = false;        // everything excluded
};

/// Score every candidate via hybrid_score with u's top-n neighbors; training
/// purchases are removed first when exclude_purchased is set. Ties break by
/// ascending book id.
inline RecommendResult recommend_top_n(const std::string& customer_id,
                                       const std::vector<std::string>& candidates,
                                       const HybridConfig& config,
                                       const SimilarityMatrix& similarity,
                                       const FactorModel& lfm,
                                       const std::set<std::string>& purchased) {
    config.validate();
    if (candidates.empty()) throw ModelError("recommend_top_n: empty candidate set");

    RecommendResult out;
    std::vector<std::pair<std::string, double>> neighbors;
    auto uidx = similarity.registry().find(customer_id);
    if (uidx && similarity.size() > 1) {
        for (auto& [v, sim] : similarity.top_n_neighbors(*uidx, config.neighborhood_size))
            neighbors.emplace_back(similarity.registry().id_of(v), sim);
    }
    out.cold = !uidx && !lfm.customers().find(customer_id);

    std::vector<RatingPrediction> scored;
    for (const auto& bid : candidates) {
        if (config.exclude_purchased && purchased.count(bid)) continue;
        scored.push_back({customer_id, bid, hybrid_score(customer_id, bid, neighbors, lfm)});
    }
    if (scored.empty()) {
        out.empty_candidates = true;
        return out;
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.book_id < b.book_id;
    });
    if (scored.size() > config.top_n) scored.resize(config.top_n);
    out.items = std::move(scored);
    return out;
}

}  // namespace bookrec

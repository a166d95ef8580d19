#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bookrec/common.hpp"
#include "bookrec/preference.hpp"

namespace bookrec {

struct SimilarityWeights {
    double topic = 0.6;
    double type = 0.3;
    double demographic = 0.1;

    void validate() const {
        if (topic < 0.0 || type < 0.0 || demographic < 0.0)
            throw ModelError("SimilarityWeights: weights must be non-negative");
        if (std::abs(topic + type + demographic - 1.0) > 1e-12)
            throw ModelError("SimilarityWeights: weights must sum to 1");
    }
};

// Floor applied to simplex entries before the log; keeps sparse distributions
// at a finite divergence.
inline constexpr double kKlEpsilon = 1e-10;

/// Symmetrized KL divergence (D(P||Q) + D(Q||P)) / 2, natural log.
inline double symmetric_kl(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ModelError("symmetric_kl: length mismatch");
    auto kl = [](const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double ai = std::max(a[i], kKlEpsilon);
            double bi = std::max(b[i], kKlEpsilon);
            d += ai * std::log(ai / bi);
        }
        return d;
    };
    return (kl(p, q) + kl(q, p)) / 2.0;
}

namespace detail {

inline std::vector<double> softmax_vec(const std::vector<double>& v) {
    double mx = v.empty() ? 0.0 : v[0];
    for (double x : v) mx = std::max(mx, x);
    std::vector<double> p(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = std::exp(v[i] - mx);
        total += p[i];
    }
    for (double& x : p) x /= total;
    return p;
}

}  // namespace detail

struct ComponentSimilarities {
    double topic = 0.0;
    double type = 0.0;
    double demographic = 0.0;
};

/// t_sim and g_sim map divergence to (0,1] via 1/(1+D_s). Type vectors are
/// softmax-normalized first since embedding means have negative components.
/// d_sim is the fraction of the four demographic fields whose active category
/// matches.
inline ComponentSimilarities component_similarities(const CustomerFeatureSet& u,
                                                    const CustomerFeatureSet& v) {
    ComponentSimilarities s;
    s.topic = 1.0 / (1.0 + symmetric_kl(u.topic_pref, v.topic_pref));
    s.type = 1.0 / (1.0 + symmetric_kl(detail::softmax_vec(u.type_pref),
                                       detail::softmax_vec(v.type_pref)));
    std::size_t matches = 0;
    for (std::size_t f = 0; f < DemographicRegistry::kNumFields; ++f)
        if (u.demo_active[f] == v.demo_active[f]) ++matches;
    s.demographic =
        static_cast<double>(matches) / static_cast<double>(DemographicRegistry::kNumFields);
    return s;
}

inline double weighted_similarity(const ComponentSimilarities& s, const SimilarityWeights& w) {
    w.validate();
    return w.topic * s.topic + w.type * s.type + w.demographic * s.demographic;
}

/// Dense symmetric customer-customer similarity matrix, diagonal 1.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;

    static SimilarityMatrix build(const std::vector<CustomerFeatureSet>& features,
                                  const SimilarityWeights& weights) {
        weights.validate();
        SimilarityMatrix m;
        const std::size_t n = features.size();
        for (const auto& f : features) m.registry_.add(f.customer_id);
        m.values_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            m.values_[i * n + i] = 1.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                double s = weighted_similarity(component_similarities(features[i], features[j]),
                                               weights);
                m.values_[i * n + j] = s;
                m.values_[j * n + i] = s;
            }
        }
        return m;
    }

    std::size_t size() const { return registry_.size(); }
    const IndexRegistry& registry() const { return registry_; }

    double at(std::size_t i, std::size_t j) const { return values_.at(i * size() + j); }

    /// Top-N most similar customers to u, excluding u, descending similarity,
    /// ties by ascending customer id.
    std::vector<std::pair<std::size_t, double>> top_n_neighbors(std::size_t u,
                                                                std::size_t n) const {
        if (u >= size()) throw ModelError("top_n_neighbors: unknown customer index");
        if (n < 1) throw ModelError("top_n_neighbors: N must be >= 1");
        std::vector<std::pair<std::size_t, double>> all;
        all.reserve(size() - 1);
        for (std::size_t v = 0; v < size(); ++v)
            if (v != u) all.emplace_back(v, at(u, v));
        std::stable_sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return registry_.id_of(a.first) < registry_.id_of(b.first);
        });
        if (all.size() > n) all.resize(n);
        return all;
    }

    std::vector<std::pair<std::size_t, double>> top_n_neighbors(const std::string& customer_id,
                                                                std::size_t n) const {
        auto idx = registry_.find(customer_id);
        if (!idx) throw ModelError("top_n_neighbors: unknown customer '" + customer_id + "'");
        return top_n_neighbors(*idx, n);
    }

    const std::vector<double>& values() const { return values_; }

    static SimilarityMatrix from_parts(IndexRegistry registry, std::vector<double> values) {
        if (values.size() != registry.size() * registry.size())
            throw ModelError("SimilarityMatrix: value count does not match registry");
        SimilarityMatrix m;
        m.registry_ = std::move(registry);
        m.values_ = std::move(values);
        return m;
    }

private:
    IndexRegistry registry_;
    std::vector<double> values_;  // row-major, size * size
};

}  // namespace bookrec

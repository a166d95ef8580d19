#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "bookrec/common.hpp"

namespace bookrec {

struct LfmConfig {
    std::size_t num_factors = 5;
    double lambda = 0.01;
    double lr0 = 0.02;
    double lr_decay = 0.05;
    std::size_t epochs = 100;
    double negative_ratio = 1.0;
    enum class NegativeMode { fixed, per_epoch_random } negative_mode = NegativeMode::fixed;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_factors < 1) throw ModelError("LfmConfig: num_factors must be >= 1");
        if (lambda < 0.0) throw ModelError("LfmConfig: lambda must be non-negative");
        if (lr0 <= 0.0) throw ModelError("LfmConfig: lr0 must be positive");
        if (lr_decay < 0.0) throw ModelError("LfmConfig: lr_decay must be non-negative");
        if (epochs < 1) throw ModelError("LfmConfig: epochs must be >= 1");
        if (negative_ratio <= 0.0) throw ModelError("LfmConfig: negative_ratio must be positive");
    }

    // Inverse-decay schedule; epoch is 0-based.
    double learning_rate(std::size_t epoch) const {
        return lr0 / (1.0 + lr_decay * static_cast<double>(epoch));
    }
};

struct Interaction {
    std::size_t customer;  // dense index
    std::size_t book;      // dense index
    double label;          // 1 = purchased, 0 = sampled negative

    bool operator==(const Interaction&) const = default;
};

struct InteractionSet {
    IndexRegistry customers;
    IndexRegistry books;
    std::vector<Interaction> positives;
    std::vector<Interaction> negatives;
    std::size_t exhausted_customers = 0;  // customers whose positives cover the pool
};

/// Popularity-proportional negative sampling: for each customer, draw
/// ceil(ratio * |positives|) distinct unpurchased books without replacement,
/// per-draw probability proportional to train popularity.
inline InteractionSet sample_negatives(
    const std::map<std::string, std::vector<std::string>>& positives_per_customer,
    const std::map<std::string, std::size_t>& popularity, double ratio, std::uint64_t seed) {
    if (popularity.empty()) throw ModelError("sample_negatives: empty popularity table");
    if (ratio <= 0.0) throw ModelError("sample_negatives: ratio must be positive");

    InteractionSet set;
    std::vector<std::string> pool;
    std::vector<double> pool_weight;
    for (const auto& [bid, count] : popularity) {
        if (count == 0) continue;
        pool.push_back(bid);
        pool_weight.push_back(static_cast<double>(count));
    }

    std::mt19937_64 g(seed);
    for (const auto& [cid, books] : positives_per_customer) {
        if (books.empty()) throw ModelError("sample_negatives: customer with no positives");
        std::size_t u = set.customers.add(cid);
        std::unordered_set<std::string> owned(books.begin(), books.end());
        for (const auto& bid : books)
            set.positives.push_back({u, set.books.add(bid), 1.0});

        std::size_t want = static_cast<std::size_t>(
            std::ceil(ratio * static_cast<double>(books.size())));
        std::vector<double> w = pool_weight;
        double total = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (owned.count(pool[i])) w[i] = 0.0;
            total += w[i];
        }
        std::size_t drawn = 0;
        while (drawn < want && total > 1e-12) {
            double r = rng_unit(g) * total, acc = 0.0;
            std::size_t pick = pool.size() - 1;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                acc += w[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
            if (w[pick] == 0.0) continue;  // numeric edge at acc boundary
            set.negatives.push_back({u, set.books.add(pool[pick]), 0.0});
            total -= w[pick];
            w[pick] = 0.0;
            ++drawn;
        }
        if (drawn < want) ++set.exhausted_customers;
    }
    return set;
}

struct PredictionResult {
    double value = 0.0;
    bool cold = false;  // unknown customer or book
};

/// Latent factor model: customer factors P (M x F) and book factors Q (N x F);
/// the predicted correlation is the row inner product.
class FactorModel {
public:
    FactorModel() = default;

    static FactorModel train(const InteractionSet& interactions, const LfmConfig& config) {
        config.validate();
        if (interactions.positives.empty() && interactions.negatives.empty())
            throw ModelError("train_lfm: no interactions");

        FactorModel m;
        m.customers_ = interactions.customers;
        m.books_ = interactions.books;
        const std::size_t F = config.num_factors;
        std::mt19937_64 init_g(config.seed);
        double scale = 1.0 / std::sqrt(static_cast<double>(F));
        auto init = [&](std::size_t rows) {
            std::vector<std::vector<double>> mat(rows, std::vector<double>(F));
            for (auto& row : mat)
                for (double& x : row) x = rng_unit(init_g) * scale;
            return mat;
        };
        m.p_ = init(m.customers_.size());
        m.q_ = init(m.books_.size());

        std::vector<Interaction> pairs = interactions.positives;
        pairs.insert(pairs.end(), interactions.negatives.begin(), interactions.negatives.end());

        std::mt19937_64 g(config.seed + 1);
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            double lr = config.learning_rate(epoch);
            rng_shuffle(pairs, g);
            for (const auto& [u, i, r] : pairs) {
                double err = r - dot(m.p_[u], m.q_[i]);
                auto& pu = m.p_[u];
                auto& qi = m.q_[i];
                for (std::size_t k = 0; k < F; ++k) {
                    double puk = pu[k];
                    pu[k] += lr * (2.0 * err * qi[k] - 2.0 * config.lambda * puk);
                    qi[k] += lr * (2.0 * err * puk - 2.0 * config.lambda * qi[k]);
                }
            }
            double loss = compute_loss(m, pairs, config.lambda);
            if (!std::isfinite(loss))
                throw ModelError("train_lfm: loss diverged at epoch " + std::to_string(epoch));
            m.loss_trace_.push_back(loss);
        }
        return m;
    }

    /// Training loop that resamples negatives every epoch (per_epoch_random).
    /// `resample` is called with the epoch index and must return that epoch's
    /// negative pairs over the same registries.
    template <typename Resampler>
    static FactorModel train_with_resampling(const InteractionSet& interactions,
                                             const LfmConfig& config, Resampler&& resample) {
        config.validate();
        FactorModel m;
        m.customers_ = interactions.customers;
        m.books_ = interactions.books;
        const std::size_t F = config.num_factors;
        std::mt19937_64 init_g(config.seed);
        double scale = 1.0 / std::sqrt(static_cast<double>(F));
        auto init = [&](std::size_t rows) {
            std::vector<std::vector<double>> mat(rows, std::vector<double>(F));
            for (auto& row : mat)
                for (double& x : row) x = rng_unit(init_g) * scale;
            return mat;
        };
        m.p_ = init(m.customers_.size());
        m.q_ = init(m.books_.size());

        std::mt19937_64 g(config.seed + 1);
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            std::vector<Interaction> pairs = interactions.positives;
            std::vector<Interaction> negs = resample(epoch);
            pairs.insert(pairs.end(), negs.begin(), negs.end());
            double lr = config.learning_rate(epoch);
            rng_shuffle(pairs, g);
            for (const auto& [u, i, r] : pairs) {
                double err = r - dot(m.p_[u], m.q_[i]);
                auto& pu = m.p_[u];
                auto& qi = m.q_[i];
                for (std::size_t k = 0; k < F; ++k) {
                    double puk = pu[k];
                    pu[k] += lr * (2.0 * err * qi[k] - 2.0 * config.lambda * puk);
                    qi[k] += lr * (2.0 * err * puk - 2.0 * config.lambda * qi[k]);
                }
            }
            double loss = compute_loss(m, pairs, config.lambda);
            if (!std::isfinite(loss))
                throw ModelError("train_lfm: loss diverged at epoch " + std::to_string(epoch));
            m.loss_trace_.push_back(loss);
        }
        return m;
    }

    PredictionResult predict(const std::string& customer_id, const std::string& book_id) const {
        auto u = customers_.find(customer_id);
        auto i = books_.find(book_id);
        if (!u || !i) return {0.0, true};
        return {dot(p_[*u], q_[*i]), false};
    }

    double predict_indexed(std::size_t u, std::size_t i) const { return dot(p_[u], q_[i]); }

    const IndexRegistry& customers() const { return customers_; }
    const IndexRegistry& books() const { return books_; }
    const std::vector<std::vector<double>>& customer_factors() const { return p_; }
    const std::vector<std::vector<double>>& book_factors() const { return q_; }
    const std::vector<double>& loss_trace() const { return loss_trace_; }

    std::vector<std::vector<double>>& mutable_customer_factors() { return p_; }
    std::vector<std::vector<double>>& mutable_book_factors() { return q_; }

    static FactorModel from_parts(IndexRegistry customers, IndexRegistry books,
                                  std::vector<std::vector<double>> p,
                                  std::vector<std::vector<double>> q) {
        FactorModel m;
        m.customers_ = std::move(customers);
        m.books_ = std::move(books);
        m.p_ = std::move(p);
        m.q_ = std::move(q);
        return m;
    }

    /// Squared-error loss over the given pairs plus lambda * ||p_u||^2 and
    /// lambda * ||q_i||^2 for each customer and book appearing in the set,
    /// counted once each.
    static double compute_loss(const FactorModel& m, const std::vector<Interaction>& pairs,
                               double lambda) {
        double loss = 0.0;
        std::set<std::size_t> seen_u, seen_i;
        for (const auto& [u, i, r] : pairs) {
            double err = r - dot(m.p_[u], m.q_[i]);
            loss += err * err;
            seen_u.insert(u);
            seen_i.insert(i);
        }
        for (std::size_t u : seen_u) loss += lambda * dot(m.p_[u], m.p_[u]);
        for (std::size_t i : seen_i) loss += lambda * dot(m.q_[i], m.q_[i]);
        return loss;
    }

    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
        return s;
    }

private:
    IndexRegistry customers_;
    IndexRegistry books_;
    std::vector<std::vector<double>> p_;  // M x F
    std::vector<std::vector<double>> q_;  // N x F
    std::vector<double> loss_trace_;
};

}  // namespace bookrec

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bookrec/common.hpp"

namespace bookrec {

struct LdaConfig {
    std::size_t num_topics = 20;
    double alpha = 0.0;  // 0 means "use 50/K"
    double beta = 0.01;
    std::size_t gibbs_iterations = 500;
    std::size_t burn_in = 100;
    std::uint64_t seed = 0;

    double effective_alpha() const {
        return alpha > 0.0 ? alpha : 50.0 / static_cast<double>(num_topics);
    }

    void validate() const {
        if (num_topics < 2) throw ModelError("LdaConfig: num_topics must be >= 2");
        if (alpha < 0.0) throw ModelError("LdaConfig: alpha must be positive");
        if (beta <= 0.0) throw ModelError("LdaConfig: beta must be positive");
        if (gibbs_iterations < 1) throw ModelError("LdaConfig: gibbs_iterations must be >= 1");
        if (burn_in >= gibbs_iterations)
            throw ModelError("LdaConfig: burn_in must be < gibbs_iterations");
    }
};

using TopicDistribution = std::vector<double>;

/// Collapsed Gibbs LDA over token-id documents. phi is K x V, theta is M x K,
/// both row-stochastic after training.
class LdaModel {
public:
    LdaModel() = default;

    static LdaModel train(const std::vector<std::vector<std::size_t>>& documents,
                          std::size_t vocab_size, const LdaConfig& config) {
        config.validate();
        if (documents.empty()) throw ModelError("train_lda: empty corpus");
        std::size_t total_tokens = 0;
        for (const auto& d : documents) {
            total_tokens += d.size();
            for (std::size_t w : d)
                if (w >= vocab_size) throw ModelError("train_lda: token id out of range");
        }
        if (total_tokens == 0) throw ModelError("train_lda: all documents empty");

        LdaModel m;
        m.config_ = config;
        m.V_ = vocab_size;
        const std::size_t K = config.num_topics, M = documents.size();
        m.degenerate_warning_ = K > total_tokens;

        m.n_kv_.assign(K, std::vector<std::size_t>(vocab_size, 0));
        m.n_mk_.assign(M, std::vector<std::size_t>(K, 0));
        m.n_k_.assign(K, 0);
        m.z_.resize(M);

        std::mt19937_64 g(config.seed);
        for (std::size_t d = 0; d < M; ++d) {
            m.z_[d].resize(documents[d].size());
            for (std::size_t n = 0; n < documents[d].size(); ++n) {
                std::size_t k = rng_index(g, K);
                m.z_[d][n] = k;
                ++m.n_kv_[k][documents[d][n]];
                ++m.n_mk_[d][k];
                ++m.n_k_[k];
            }
        }

        std::vector<double> cond(K);
        for (std::size_t iter = 0; iter < config.gibbs_iterations; ++iter) {
            for (std::size_t d = 0; d < M; ++d) {
                for (std::size_t n = 0; n < documents[d].size(); ++n) {
                    std::size_t w = documents[d][n];
                    std::size_t old = m.z_[d][n];
                    --m.n_kv_[old][w];
                    --m.n_mk_[d][old];
                    --m.n_k_[old];
                    std::size_t k = m.sample_topic(d, w, g, cond);
                    m.z_[d][n] = k;
                    ++m.n_kv_[k][w];
                    ++m.n_mk_[d][k];
                    ++m.n_k_[k];
                }
            }
        }

        // Single final-sample readout from smoothed counts.
        const double alpha = config.effective_alpha(), beta = config.beta;
        m.phi_.assign(K, std::vector<double>(vocab_size));
        for (std::size_t k = 0; k < K; ++k) {
            double denom = static_cast<double>(m.n_k_[k]) + beta * static_cast<double>(vocab_size);
            for (std::size_t v = 0; v < vocab_size; ++v)
                m.phi_[k][v] = (static_cast<double>(m.n_kv_[k][v]) + beta) / denom;
        }
        m.theta_.assign(M, std::vector<double>(K));
        for (std::size_t d = 0; d < M; ++d) {
            double denom = static_cast<double>(documents[d].size()) +
                           alpha * static_cast<double>(K);
            for (std::size_t k = 0; k < K; ++k)
                m.theta_[d][k] = (static_cast<double>(m.n_mk_[d][k]) + alpha) / denom;
        }
        return m;
    }

    std::size_t num_topics() const { return config_.num_topics; }
    std::size_t vocab_size() const { return V_; }
    std::size_t num_documents() const { return theta_.size(); }
    const LdaConfig& config() const { return config_; }
    const std::vector<std::vector<double>>& phi() const { return phi_; }
    const std::vector<std::vector<double>>& theta() const { return theta_; }
    bool degenerate_warning() const { return degenerate_warning_; }

    /// Smoothed theta row for a training document.
    TopicDistribution book_topic_distribution(std::size_t doc_index) const {
        if (doc_index >= theta_.size())
            throw ModelError("book_topic_distribution: unknown document index");
        return theta_[doc_index];
    }

    /// Fold-in theta for an unseen document: a fixed number of expectation
    /// sweeps with phi frozen. theta is refit from expected topic counts each
    /// sweep, so the result depends only on the document's content.
    TopicDistribution fold_in(const std::vector<std::size_t>& doc,
                              std::size_t sweeps = 20) const {
        const std::size_t K = config_.num_topics;
        const double alpha = config_.effective_alpha();
        std::vector<double> theta(K, 1.0 / static_cast<double>(K));
        if (doc.empty()) return theta;
        for (std::size_t w : doc)
            if (w >= V_) throw ModelError("fold_in: token id out of range");
        const double denom = static_cast<double>(doc.size()) + alpha * static_cast<double>(K);
        std::vector<double> counts(K);
        for (std::size_t s = 0; s < sweeps; ++s) {
            std::fill(counts.begin(), counts.end(), 0.0);
            for (std::size_t w : doc) {
                double total = 0.0;
                for (std::size_t k = 0; k < K; ++k) total += theta[k] * phi_[k][w];
                for (std::size_t k = 0; k < K; ++k) counts[k] += theta[k] * phi_[k][w] / total;
            }
            for (std::size_t k = 0; k < K; ++k) theta[k] = (counts[k] + alpha) / denom;
        }
        return theta;
    }

    // Restore from persisted arrays.
    static LdaModel from_parts(LdaConfig config, std::size_t vocab_size,
                               std::vector<std::vector<double>> phi,
                               std::vector<std::vector<double>> theta) {
        LdaModel m;
        m.config_ = config;
        m.V_ = vocab_size;
        m.phi_ = std::move(phi);
        m.theta_ = std::move(theta);
        return m;
    }

private:
    std::size_t sample_topic(std::size_t d, std::size_t w, std::mt19937_64& g,
                             std::vector<double>& cond) const {
        const std::size_t K = config_.num_topics;
        const double alpha = config_.effective_alpha(), beta = config_.beta;
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            cond[k] = (static_cast<double>(n_mk_[d][k]) + alpha) *
                      (static_cast<double>(n_kv_[k][w]) + beta) /
                      (static_cast<double>(n_k_[k]) + beta * static_cast<double>(V_));
            total += cond[k];
        }
        double r = rng_unit(g) * total, acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            acc += cond[k];
            if (r < acc) return k;
        }
        return K - 1;
    }

    LdaConfig config_;
    std::size_t V_ = 0;
    std::vector<std::vector<double>> phi_;    // K x V
    std::vector<std::vector<double>> theta_;  // M x K
    std::vector<std::vector<std::size_t>> z_;
    std::vector<std::vector<std::size_t>> n_kv_;
    std::vector<std::vector<std::size_t>> n_mk_;
    std::vector<std::size_t> n_k_;
    bool degenerate_warning_ = false;
};

/// Held-out perplexity: exp(-sum log p(w) / total tokens) with
/// p(w) = sum_z p(z|d) p(w|z), p(z|d) from fold-in.
inline double perplexity(const LdaModel& model,
                         const std::vector<std::vector<std::size_t>>& test_documents,
                         std::size_t fold_in_sweeps = 20) {
    std::vector<double> doc_logs;
    std::size_t tokens = 0;
    for (const auto& doc : test_documents) {
        if (doc.empty()) continue;
        auto theta = model.fold_in(doc, fold_in_sweeps);
        double log_sum = 0.0;
        for (std::size_t w : doc) {
            if (w >= model.vocab_size()) throw ModelError("perplexity: token id out of range");
            double pw = 0.0;
            for (std::size_t k = 0; k < model.num_topics(); ++k)
                pw += theta[k] * model.phi()[k][w];
            if (pw <= 0.0) throw ModelError("perplexity: zero token probability");
            log_sum += std::log(pw);
            ++tokens;
        }
        doc_logs.push_back(log_sum);
    }
    if (tokens == 0) throw ModelError("perplexity: no test tokens");
    // Sorted accumulation: the total is independent of document order.
    std::sort(doc_logs.begin(), doc_logs.end());
    double total = 0.0;
    for (double x : doc_logs) total += x;
    return std::exp(-total / static_cast<double>(tokens));
}

/// Train one model per candidate K on the leading 80% of the corpus and
/// report held-out perplexity on the rest. Sorted by K.
inline std::vector<std::pair<std::size_t, double>> sweep_topic_count(
    const std::vector<std::vector<std::size_t>>& documents, std::size_t vocab_size,
    std::vector<std::size_t> candidate_Ks, const LdaConfig& config_template) {
    if (candidate_Ks.empty()) throw ModelError("sweep_topic_count: no candidate Ks");
    std::sort(candidate_Ks.begin(), candidate_Ks.end());
    std::size_t n_train = std::max<std::size_t>(1, documents.size() * 4 / 5);
    if (n_train == documents.size()) n_train = documents.size() - 1;
    if (n_train == 0) throw ModelError("sweep_topic_count: need >= 2 documents");
    std::vector<std::vector<std::size_t>> train_docs(documents.begin(),
                                                     documents.begin() + n_train);
    std::vector<std::vector<std::size_t>> heldout(documents.begin() + n_train,
                                                  documents.end());
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t K : candidate_Ks) {
        LdaConfig c = config_template;
        c.num_topics = K;
        auto m = LdaModel::train(train_docs, vocab_size, c);
        out.emplace_back(K, perplexity(m, heldout));
    }
    return out;
}

}  // namespace bookrec

#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bookrec/common.hpp"

namespace bookrec {

struct EmbedConfig {
    std::size_t dim = 50;
    enum class Mode { cbow, skipgram } mode = Mode::cbow;
    std::size_t window = 2;
    std::size_t epochs = 5;
    double learning_rate = 0.05;
    enum class Objective { full_softmax, negative_sampling } objective = Objective::full_softmax;
    std::size_t negatives = 5;  // negative_sampling only
    std::uint64_t seed = 0;

    void validate() const {
        if (dim < 1) throw ModelError("EmbedConfig: dim must be >= 1");
        if (window < 1) throw ModelError("EmbedConfig: window must be >= 1");
        if (epochs < 1) throw ModelError("EmbedConfig: epochs must be >= 1");
        if (learning_rate <= 0.0) throw ModelError("EmbedConfig: learning_rate must be positive");
    }
};

/// Token -> dense vector table. Lookups of unknown tokens return the zero
/// vector and bump a miss counter instead of failing; pretrained
/// general-corpus files often lack niche retail categories.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }
    std::size_t miss_count() const { return miss_count_; }

    void insert(const std::string& token, std::vector<double> vec) {
        if (vec.size() != dim_) throw ModelError("EmbeddingTable: dimension mismatch");
        for (double x : vec)
            if (!std::isfinite(x)) throw ModelError("EmbeddingTable: non-finite component");
        vectors_[token] = std::move(vec);
    }

    bool contains(const std::string& token) const { return vectors_.count(token) > 0; }

    std::vector<double> vector_for_type(const std::string& token) const {
        auto it = vectors_.find(token);
        if (it == vectors_.end()) {
            ++miss_count_;
            return std::vector<double>(dim_, 0.0);
        }
        return it->second;
    }

    /// Top-k by cosine, query excluded, ties by lexicographic token order.
    std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& token,
                                                                  std::size_t k) const {
        auto it = vectors_.find(token);
        if (it == vectors_.end()) throw ModelError("nearest_neighbors: unknown token");
        if (k < 1) throw ModelError("nearest_neighbors: k must be >= 1");
        double qn = norm(it->second);
        if (qn == 0.0) throw ModelError("nearest_neighbors: zero query vector");
        std::vector<std::pair<std::string, double>> all;
        for (const auto& [tok, vec] : vectors_) {
            if (tok == token) continue;
            double n = norm(vec);
            double cos = n == 0.0 ? 0.0 : dot(it->second, vec) / (qn * n);
            all.emplace_back(tok, cos);
        }
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (all.size() > k) all.resize(k);
        return all;
    }

    void write(std::ostream& out) const {
        out << vectors_.size() << ' ' << dim_ << '\n';
        for (const auto& [tok, vec] : vectors_) {
            out << tok;
            for (double x : vec) {
                std::ostringstream s;
                s << std::setprecision(6) << x;
                out << ' ' << s.str();
            }
            out << '\n';
        }
    }

    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }

    static double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<double>> vectors_;
    mutable std::size_t miss_count_ = 0;
};

/// word2vec text format: header `<vocab_size> <dim>`, then one
/// space-separated line per word.
inline EmbeddingTable load_pretrained(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("embeddings: empty input");
    std::istringstream hs(header);
    std::size_t vocab = 0, dim = 0;
    if (!(hs >> vocab >> dim) || dim == 0)
        throw ParseError("embeddings: bad header '" + header + "'");
    EmbeddingTable table(dim);
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        std::vector<double> vec;
        vec.reserve(dim);
        double x;
        while (ls >> x) vec.push_back(x);
        if (vec.size() != dim)
            throw ParseError("embeddings: line " + std::to_string(lineno) + ": expected " +
                             std::to_string(dim) + " components, got " +
                             std::to_string(vec.size()));
        if (table.contains(word))
            throw ParseError("embeddings: line " + std::to_string(lineno) +
                             ": duplicate word '" + word + "'");
        table.insert(word, std::move(vec));
    }
    if (table.size() != vocab)
        throw ParseError("embeddings: header promises " + std::to_string(vocab) +
                         " words, file has " + std::to_string(table.size()));
    return table;
}

namespace detail {

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

}  // namespace detail

/// Trainer state: input vectors (the published table) and output vectors
/// (context side, training only). Exposed so tests can finite-difference the
/// softmax objective.
class EmbeddingTrainer {
public:
    EmbeddingTrainer(const std::vector<std::vector<std::string>>& corpus, EmbedConfig config)
        : config_(config) {
        config_.validate();
        if (corpus.empty()) throw ModelError("train_embeddings: empty corpus");
        for (const auto& sent : corpus)
            for (const auto& tok : sent) {
                if (!vocab_.find(tok)) counts_.push_back(0);
                ++counts_[vocab_.add(tok)];
            }
        if (vocab_.size() == 0) throw ModelError("train_embeddings: empty vocabulary");
        if (config_.objective == EmbedConfig::Objective::full_softmax && vocab_.size() > 10000)
            throw ModelError("train_embeddings: full_softmax limited to V <= 10000");
        corpus_ids_.reserve(corpus.size());
        for (const auto& sent : corpus) {
            std::vector<std::size_t> ids;
            ids.reserve(sent.size());
            for (const auto& tok : sent) ids.push_back(*vocab_.find(tok));
            corpus_ids_.push_back(std::move(ids));
        }
        std::mt19937_64 g(config_.seed);
        double r = 0.5 / static_cast<double>(config_.dim);
        auto init = [&] {
            std::vector<std::vector<double>> m(vocab_.size(),
                                               std::vector<double>(config_.dim));
            for (auto& row : m)
                for (double& x : row) x = (rng_unit(g) * 2.0 - 1.0) * r;
            return m;
        };
        in_ = init();
        out_ = init();
    }

    void run() {
        std::mt19937_64 g(config_.seed + 1);
        for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
            for (const auto& sent : corpus_ids_) {
                for (std::size_t pos = 0; pos < sent.size(); ++pos) {
                    auto ctx = context_ids(sent, pos);
                    if (ctx.empty()) continue;
                    if (config_.mode == EmbedConfig::Mode::cbow) {
                        train_pair_cbow(sent[pos], ctx, g);
                    } else {
                        for (std::size_t c : ctx) train_pair_sg(c, sent[pos], g);
                    }
                }
            }
        }
    }

    /// Sum over (w, c) pairs of log P(w|c) under the full softmax. The
    /// objective the full_softmax gradient steps ascend.
    double log_likelihood() const {
        double total = 0.0;
        for (const auto& sent : corpus_ids_) {
            for (std::size_t pos = 0; pos < sent.size(); ++pos) {
                auto ctx = context_ids(sent, pos);
                if (ctx.empty()) continue;
                if (config_.mode == EmbedConfig::Mode::cbow) {
                    total += std::log(softmax_prob(sent[pos], context_mean(ctx)));
                } else {
                    for (std::size_t c : ctx) total += std::log(softmax_prob(sent[pos], in_[c]));
                }
            }
        }
        return total;
    }

    /// P(w | x) = exp(out_w . x) / sum_w' exp(out_w' . x).
    double softmax_prob(std::size_t target, const std::vector<double>& x) const {
        std::vector<double> logits(vocab_.size());
        for (std::size_t w = 0; w < vocab_.size(); ++w) logits[w] = EmbeddingTable::dot(out_[w], x);
        return detail::softmax(logits)[target];
    }

    EmbeddingTable table() const {
        EmbeddingTable t(config_.dim);
        for (std::size_t i = 0; i < vocab_.size(); ++i) t.insert(vocab_.id_of(i), in_[i]);
        return t;
    }

    const IndexRegistry& vocab() const { return vocab_; }
    std::vector<std::vector<double>>& input_vectors() { return in_; }
    std::vector<std::vector<double>>& output_vectors() { return out_; }

    std::vector<double> context_mean(const std::vector<std::size_t>& ctx) const {
        std::vector<double> x(config_.dim, 0.0);
        for (std::size_t c : ctx)
            for (std::size_t j = 0; j < config_.dim; ++j) x[j] += in_[c][j];
        for (double& v : x) v /= static_cast<double>(ctx.size());
        return x;
    }

private:
    std::vector<std::size_t> context_ids(const std::vector<std::size_t>& sent,
                                         std::size_t pos) const {
        std::vector<std::size_t> ctx;
        std::size_t lo = pos > config_.window ? pos - config_.window : 0;
        std::size_t hi = std::min(sent.size(), pos + config_.window + 1);
        for (std::size_t i = lo; i < hi; ++i)
            if (i != pos) ctx.push_back(sent[i]);
        return ctx;
    }

    // One gradient-ascent step on log P(target | mean(context)).
    void train_pair_cbow(std::size_t target, const std::vector<std::size_t>& ctx,
                         std::mt19937_64& g) {
        auto x = context_mean(ctx);
        std::vector<double> grad_x(config_.dim, 0.0);
        if (config_.objective == EmbedConfig::Objective::full_softmax) {
            step_softmax(target, x, grad_x);
        } else {
            step_negative(target, x, grad_x, g);
        }
        double scale = config_.learning_rate / static_cast<double>(ctx.size());
        for (std::size_t c : ctx)
            for (std::size_t j = 0; j < config_.dim; ++j) in_[c][j] += scale * grad_x[j];
    }

    void train_pair_sg(std::size_t target, std::size_t word, std::mt19937_64& g) {
        std::vector<double> grad_x(config_.dim, 0.0);
        if (config_.objective == EmbedConfig::Objective::full_softmax) {
            step_softmax(target, in_[word], grad_x);
        } else {
            step_negative(target, in_[word], grad_x, g);
        }
        for (std::size_t j = 0; j < config_.dim; ++j)
            in_[word][j] += config_.learning_rate * grad_x[j];
    }

    // Updates output vectors in place and accumulates d(log P)/dx into grad_x.
    void step_softmax(std::size_t target, const std::vector<double>& x,
                      std::vector<double>& grad_x) {
        std::vector<double> logits(vocab_.size());
        for (std::size_t w = 0; w < vocab_.size(); ++w) logits[w] = EmbeddingTable::dot(out_[w], x);
        auto p = detail::softmax(logits);
        for (std::size_t w = 0; w < vocab_.size(); ++w) {
            double coef = (w == target ? 1.0 : 0.0) - p[w];
            for (std::size_t j = 0; j < config_.dim; ++j) {
                grad_x[j] += coef * out_[w][j];
                out_[w][j] += config_.learning_rate * coef * x[j];
            }
        }
    }

    void step_negative(std::size_t target, const std::vector<double>& x,
                       std::vector<double>& grad_x, std::mt19937_64& g) {
        auto update = [&](std::size_t w, double label) {
            double s = 1.0 / (1.0 + std::exp(-EmbeddingTable::dot(out_[w], x)));
            double coef = label - s;
            for (std::size_t j = 0; j < config_.dim; ++j) {
                grad_x[j] += coef * out_[w][j];
                out_[w][j] += config_.learning_rate * coef * x[j];
            }
        };
        update(target, 1.0);
        for (std::size_t n = 0; n < config_.negatives; ++n) {
            std::size_t w = draw_unigram(g);
            if (w == target) continue;
            update(w, 0.0);
        }
    }

    // Unigram^0.75 draw via cached cumulative weights.
    std::size_t draw_unigram(std::mt19937_64& g) {
        if (cum_.empty()) {
            cum_.resize(counts_.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < counts_.size(); ++i) {
                acc += std::pow(static_cast<double>(counts_[i]), 0.75);
                cum_[i] = acc;
            }
        }
        double r = rng_unit(g) * cum_.back();
        return static_cast<std::size_t>(
            std::lower_bound(cum_.begin(), cum_.end(), r) - cum_.begin());
    }

    EmbedConfig config_;
    IndexRegistry vocab_;
    std::vector<std::size_t> counts_;
    std::vector<double> cum_;
    std::vector<std::vector<std::size_t>> corpus_ids_;
    std::vector<std::vector<double>> in_;
    std::vector<std::vector<double>> out_;
};

inline EmbeddingTable train_embeddings(const std::vector<std::vector<std::string>>& corpus,
                                       const EmbedConfig& config) {
    EmbeddingTrainer trainer(corpus, config);
    trainer.run();
    return trainer.table();
}

}  // namespace bookrec

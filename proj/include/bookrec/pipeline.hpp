#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bookrec/common.hpp"
#include "bookrec/data_ingest.hpp"
#include "bookrec/embeddings.hpp"
#include "bookrec/evaluation.hpp"
#include "bookrec/hybrid.hpp"
#include "bookrec/lfm.hpp"
#include "bookrec/preference.hpp"
#include "bookrec/similarity.hpp"
#include "bookrec/synth.hpp"
#include "bookrec/topic_model.hpp"

namespace bookrec {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

struct PipelineConfig {
    struct Paths {
        std::string transactions;
        std::string catalog;
        std::string profiles;
        std::string pretrained_vectors;  // empty: train at toy scale
        std::string model_dir = "model";
        std::string report_dir = "report";
    } paths;

    std::uint64_t seed = 42;
    SplitPolicy split;
    TokenizerMode tokenizer_mode = TokenizerMode::whitespace;
    int tokenizer_ngram = 2;

    LdaConfig lda;
    std::vector<std::size_t> lda_sweep_ks;  // non-empty: pick K by perplexity sweep

    EmbedConfig embed;
    LfmConfig lfm;
    SimilarityWeights weights;
    HybridConfig hybrid;
    std::vector<std::size_t> top_n_list{10, 20};
    std::vector<std::size_t> eval_neighborhoods{10, 12, 14, 16, 18, 20, 22, 24, 26, 28};
    std::vector<Method> eval_methods{Method::hybrid, Method::lfm_only};
};

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw ParseError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

/// Parse the declarative pipeline config. Unknown keys are errors.
inline PipelineConfig parse_config(const json& j) {
    PipelineConfig c;
    detail::reject_unknown_keys(j,
                                {"paths", "seed", "split", "tokenizer", "lda", "embed", "lfm",
                                 "similarity", "hybrid", "evaluate"},
                                "top level");
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        detail::reject_unknown_keys(p,
                                    {"transactions", "catalog", "profiles", "pretrained_vectors",
                                     "model_dir", "report_dir"},
                                    "paths");
        detail::get_if(p, "transactions", c.paths.transactions);
        detail::get_if(p, "catalog", c.paths.catalog);
        detail::get_if(p, "profiles", c.paths.profiles);
        detail::get_if(p, "pretrained_vectors", c.paths.pretrained_vectors);
        detail::get_if(p, "model_dir", c.paths.model_dir);
        detail::get_if(p, "report_dir", c.paths.report_dir);
    }
    detail::get_if(j, "seed", c.seed);
    if (j.contains("split")) {
        const auto& s = j.at("split");
        detail::reject_unknown_keys(s, {"policy", "fraction"}, "split");
        std::string policy = "per_customer_tail";
        detail::get_if(s, "policy", policy);
        if (policy == "per_customer_tail")
            c.split.kind = SplitPolicy::Kind::per_customer_tail;
        else if (policy == "global_random")
            c.split.kind = SplitPolicy::Kind::global_random;
        else
            throw ParseError("config: unknown split policy '" + policy + "'");
        detail::get_if(s, "fraction", c.split.fraction);
    }
    if (j.contains("tokenizer")) {
        const auto& t = j.at("tokenizer");
        detail::reject_unknown_keys(t, {"mode", "ngram"}, "tokenizer");
        std::string mode = "whitespace";
        detail::get_if(t, "mode", mode);
        if (mode == "whitespace")
            c.tokenizer_mode = TokenizerMode::whitespace;
        else if (mode == "char_ngram")
            c.tokenizer_mode = TokenizerMode::char_ngram;
        else
            throw ParseError("config: unknown tokenizer mode '" + mode + "'");
        detail::get_if(t, "ngram", c.tokenizer_ngram);
    }
    if (j.contains("lda")) {
        const auto& l = j.at("lda");
        detail::reject_unknown_keys(
            l, {"num_topics", "alpha", "beta", "gibbs_iterations", "burn_in", "sweep_ks"}, "lda");
        detail::get_if(l, "num_topics", c.lda.num_topics);
        detail::get_if(l, "alpha", c.lda.alpha);
        detail::get_if(l, "beta", c.lda.beta);
        detail::get_if(l, "gibbs_iterations", c.lda.gibbs_iterations);
        detail::get_if(l, "burn_in", c.lda.burn_in);
        detail::get_if(l, "sweep_ks", c.lda_sweep_ks);
    }
    if (j.contains("embed")) {
        const auto& e = j.at("embed");
        detail::reject_unknown_keys(
            e, {"dim", "mode", "window", "epochs", "learning_rate", "objective", "negatives"},
            "embed");
        detail::get_if(e, "dim", c.embed.dim);
        std::string mode = "cbow";
        detail::get_if(e, "mode", mode);
        if (mode == "cbow")
            c.embed.mode = EmbedConfig::Mode::cbow;
        else if (mode == "skipgram")
            c.embed.mode = EmbedConfig::Mode::skipgram;
        else
            throw ParseError("config: unknown embed mode '" + mode + "'");
        detail::get_if(e, "window", c.embed.window);
        detail::get_if(e, "epochs", c.embed.epochs);
        detail::get_if(e, "learning_rate", c.embed.learning_rate);
        std::string obj = "full_softmax";
        detail::get_if(e, "objective", obj);
        if (obj == "full_softmax")
            c.embed.objective = EmbedConfig::Objective::full_softmax;
        else if (obj == "negative_sampling")
            c.embed.objective = EmbedConfig::Objective::negative_sampling;
        else
            throw ParseError("config: unknown embed objective '" + obj + "'");
        detail::get_if(e, "negatives", c.embed.negatives);
    }
    if (j.contains("lfm")) {
        const auto& l = j.at("lfm");
        detail::reject_unknown_keys(l,
                                    {"num_factors", "lambda", "lr0", "lr_decay", "epochs",
                                     "negative_ratio", "negative_mode"},
                                    "lfm");
        detail::get_if(l, "num_factors", c.lfm.num_factors);
        detail::get_if(l, "lambda", c.lfm.lambda);
        detail::get_if(l, "lr0", c.lfm.lr0);
        detail::get_if(l, "lr_decay", c.lfm.lr_decay);
        detail::get_if(l, "epochs", c.lfm.epochs);
        detail::get_if(l, "negative_ratio", c.lfm.negative_ratio);
        std::string mode = "fixed";
        detail::get_if(l, "negative_mode", mode);
        if (mode == "fixed")
            c.lfm.negative_mode = LfmConfig::NegativeMode::fixed;
        else if (mode == "per_epoch_random")
            c.lfm.negative_mode = LfmConfig::NegativeMode::per_epoch_random;
        else
            throw ParseError("config: unknown negative_mode '" + mode + "'");
    }
    if (j.contains("similarity")) {
        const auto& s = j.at("similarity");
        detail::reject_unknown_keys(s, {"x1", "x2", "x3"}, "similarity");
        detail::get_if(s, "x1", c.weights.topic);
        detail::get_if(s, "x2", c.weights.type);
        detail::get_if(s, "x3", c.weights.demographic);
        try {
            c.weights.validate();
        } catch (const ModelError& e) {
            throw ParseError(std::string("config: ") + e.what());
        }
    }
    if (j.contains("hybrid")) {
        const auto& h = j.at("hybrid");
        detail::reject_unknown_keys(h, {"neighborhood_size", "top_n", "exclude_purchased"},
                                    "hybrid");
        detail::get_if(h, "neighborhood_size", c.hybrid.neighborhood_size);
        detail::get_if(h, "top_n", c.top_n_list);
        detail::get_if(h, "exclude_purchased", c.hybrid.exclude_purchased);
        if (c.top_n_list.empty()) throw ParseError("config: hybrid.top_n must be non-empty");
        c.hybrid.top_n = c.top_n_list.front();
    }
    if (j.contains("evaluate")) {
        const auto& e = j.at("evaluate");
        detail::reject_unknown_keys(e, {"neighborhood_sizes", "methods"}, "evaluate");
        detail::get_if(e, "neighborhood_sizes", c.eval_neighborhoods);
        if (e.contains("methods")) {
            c.eval_methods.clear();
            for (const auto& m : e.at("methods")) {
                std::string name = m.get<std::string>();
                if (name == "hybrid")
                    c.eval_methods.push_back(Method::hybrid);
                else if (name == "lfm_only")
                    c.eval_methods.push_back(Method::lfm_only);
                else
                    throw ParseError("config: unknown method '" + name + "'");
            }
        }
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("config: cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ParseError("config: " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

struct ModelBundle {
    int format_version = kModelFormatVersion;
    json config_echo;

    std::vector<std::string> vocab;  // token by id
    IndexRegistry book_docs;         // book_id -> LDA document index
    std::vector<std::string> book_types;  // per document, for type lookups
    LdaModel lda;
    EmbeddingTable embeddings;
    DemographicRegistry demo_registry;
    std::vector<CustomerFeatureSet> features;  // sorted by customer_id
    std::map<std::string, std::vector<std::string>> train_purchases;
    FactorModel lfm;
    SimilarityMatrix similarity;
};

namespace detail {

inline json registry_to_json(const IndexRegistry& r) { return json(r.ids()); }

inline IndexRegistry registry_from_json(const json& j) {
    IndexRegistry r;
    for (const auto& id : j) r.add(id.get<std::string>());
    return r;
}

inline json matrix_to_json(const std::vector<std::vector<double>>& m) { return json(m); }

}  // namespace detail

inline json bundle_to_json(const ModelBundle& b) {
    json j;
    j["format_version"] = b.format_version;
    j["config"] = b.config_echo;
    j["vocab"] = b.vocab;
    j["book_docs"] = detail::registry_to_json(b.book_docs);
    j["book_types"] = b.book_types;
    j["lda"] = {{"num_topics", b.lda.config().num_topics},
                {"alpha", b.lda.config().alpha},
                {"beta", b.lda.config().beta},
                {"gibbs_iterations", b.lda.config().gibbs_iterations},
                {"burn_in", b.lda.config().burn_in},
                {"seed", b.lda.config().seed},
                {"vocab_size", b.lda.vocab_size()},
                {"num_documents", b.lda.num_documents()},
                {"phi", detail::matrix_to_json(b.lda.phi())},
                {"theta", detail::matrix_to_json(b.lda.theta())}};
    json vecs = json::object();
    for (const auto& [tok, v] : b.embeddings.vectors()) vecs[tok] = v;
    j["embeddings"] = {{"dim", b.embeddings.dim()}, {"vectors", vecs}};
    j["demographics"] = {{"card_types", b.demo_registry.card_types()},
                         {"contacts", b.demo_registry.contacts()}};
    json feats = json::array();
    for (const auto& f : b.features) {
        feats.push_back({{"customer_id", f.customer_id},
                         {"topic_pref", f.topic_pref},
                         {"type_pref", f.type_pref},
                         {"demographics", f.demographics},
                         {"demo_active", f.demo_active},
                         {"purchase_count", f.purchase_count}});
    }
    j["features"] = feats;
    j["train_purchases"] = b.train_purchases;
    j["lfm"] = {{"customers", detail::registry_to_json(b.lfm.customers())},
                {"books", detail::registry_to_json(b.lfm.books())},
                {"p", detail::matrix_to_json(b.lfm.customer_factors())},
                {"q", detail::matrix_to_json(b.lfm.book_factors())}};
    j["similarity"] = {{"customers", detail::registry_to_json(b.similarity.registry())},
                       {"values", b.similarity.values()}};
    return j;
}

inline ModelBundle bundle_from_json(const json& j) {
    if (!j.contains("format_version") || !j.at("format_version").is_number_integer())
        throw ParseError("model bundle: missing format_version");
    int ver = j.at("format_version").get<int>();
    if (ver != kModelFormatVersion)
        throw ParseError("model bundle: unsupported format_version " + std::to_string(ver) +
                         " (supported: " + std::to_string(kModelFormatVersion) + ")");
    ModelBundle b;
    b.format_version = ver;
    b.config_echo = j.at("config");
    b.vocab = j.at("vocab").get<std::vector<std::string>>();
    b.book_docs = detail::registry_from_json(j.at("book_docs"));
    b.book_types = j.at("book_types").get<std::vector<std::string>>();

    const auto& l = j.at("lda");
    LdaConfig lc;
    lc.num_topics = l.at("num_topics").get<std::size_t>();
    lc.alpha = l.at("alpha").get<double>();
    lc.beta = l.at("beta").get<double>();
    lc.gibbs_iterations = l.at("gibbs_iterations").get<std::size_t>();
    lc.burn_in = l.at("burn_in").get<std::size_t>();
    lc.seed = l.at("seed").get<std::uint64_t>();
    std::size_t V = l.at("vocab_size").get<std::size_t>();
    auto phi = l.at("phi").get<std::vector<std::vector<double>>>();
    auto theta = l.at("theta").get<std::vector<std::vector<double>>>();
    for (std::size_t k = 0; k < phi.size(); ++k)
        if (phi[k].size() != V)
            throw ParseError("model bundle: phi row " + std::to_string(k) + " has length " +
                             std::to_string(phi[k].size()) + ", expected " + std::to_string(V));
    for (std::size_t m = 0; m < theta.size(); ++m)
        if (theta[m].size() != lc.num_topics)
            throw ParseError("model bundle: theta row " + std::to_string(m) + " has length " +
                             std::to_string(theta[m].size()) + ", expected " +
                             std::to_string(lc.num_topics));
    b.lda = LdaModel::from_parts(lc, V, std::move(phi), std::move(theta));

    const auto& e = j.at("embeddings");
    std::size_t dim = e.at("dim").get<std::size_t>();
    b.embeddings = EmbeddingTable(dim);
    for (auto it = e.at("vectors").begin(); it != e.at("vectors").end(); ++it)
        b.embeddings.insert(it.key(), it.value().get<std::vector<double>>());

    b.demo_registry.set_categories(
        j.at("demographics").at("card_types").get<std::vector<std::string>>(),
        j.at("demographics").at("contacts").get<std::vector<std::string>>());

    for (const auto& f : j.at("features")) {
        CustomerFeatureSet fs;
        fs.customer_id = f.at("customer_id").get<std::string>();
        fs.topic_pref = f.at("topic_pref").get<std::vector<double>>();
        fs.type_pref = f.at("type_pref").get<std::vector<double>>();
        fs.demographics = f.at("demographics").get<std::vector<double>>();
        auto act = f.at("demo_active").get<std::vector<std::size_t>>();
        if (act.size() != DemographicRegistry::kNumFields)
            throw ParseError("model bundle: bad demo_active length for " + fs.customer_id);
        std::copy(act.begin(), act.end(), fs.demo_active.begin());
        fs.purchase_count = f.at("purchase_count").get<std::size_t>();
        b.features.push_back(std::move(fs));
    }
    b.train_purchases =
        j.at("train_purchases").get<std::map<std::string, std::vector<std::string>>>();

    const auto& lf = j.at("lfm");
    auto p = lf.at("p").get<std::vector<std::vector<double>>>();
    auto q = lf.at("q").get<std::vector<std::vector<double>>>();
    b.lfm = FactorModel::from_parts(detail::registry_from_json(lf.at("customers")),
                                    detail::registry_from_json(lf.at("books")), std::move(p),
                                    std::move(q));
    if (b.lfm.customer_factors().size() != b.lfm.customers().size())
        throw ParseError("model bundle: P row count does not match customer registry");
    if (b.lfm.book_factors().size() != b.lfm.books().size())
        throw ParseError("model bundle: Q row count does not match book registry");

    const auto& s = j.at("similarity");
    b.similarity = SimilarityMatrix::from_parts(detail::registry_from_json(s.at("customers")),
                                                s.at("values").get<std::vector<double>>());
    return b;
}

/// Canonical serialization: alphabetical keys, shortest round-trip reals, so
/// save -> load -> save is byte-identical.
inline void save_model(const ModelBundle& b, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ModelError("save_model: cannot write " + path.string());
    f << bundle_to_json(b).dump() << '\n';
}

inline ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("load_model: cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ParseError("load_model: " + path.string() + ": truncated or invalid: " + e.what());
    }
    return bundle_from_json(j);
}

namespace detail {

inline std::ifstream open_input(const std::string& path, const char* what) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError(std::string(what) + ": cannot open " + path);
    return f;
}

}  // namespace detail

inline Dataset ingest_dataset(const PipelineConfig& cfg) {
    auto tf = detail::open_input(cfg.paths.transactions, "transactions");
    auto cf = detail::open_input(cfg.paths.catalog, "catalog");
    auto pf = detail::open_input(cfg.paths.profiles, "profiles");
    auto tx = parse_transactions(tf);
    auto cat = parse_catalog(cf, cfg.tokenizer_mode, cfg.tokenizer_ngram);
    auto prof = parse_profiles(pf);
    SplitPolicy split = cfg.split;
    if (split.kind == SplitPolicy::Kind::global_random) split.seed = cfg.seed;
    return build_dataset(std::move(tx.records), cat.records, prof.records, split);
}

inline json cmd_ingest(const PipelineConfig& cfg, std::ostream& log = std::cout) {
    Dataset ds = ingest_dataset(cfg);
    json summary = {{"transactions", ds.transactions.size()},
                    {"books", ds.catalog.size()},
                    {"customers", ds.profiles.size()},
                    {"vocabulary", ds.vocab_size()},
                    {"train", ds.train.size()},
                    {"test", ds.test.size()}};
    std::filesystem::create_directories(cfg.paths.model_dir);
    std::ofstream out(std::filesystem::path(cfg.paths.model_dir) / "dataset_summary.json",
                      std::ios::binary);
    out << summary.dump(2) << '\n';
    log << "stage=ingest transactions=" << ds.transactions.size() << " books="
        << ds.catalog.size() << " train=" << ds.train.size() << " test=" << ds.test.size()
        << "\n";
    return summary;
}

/// ingest -> LDA (sweep or fixed K) -> embeddings (load or train) ->
/// preferences -> similarity -> negative sampling -> LFM -> persisted bundle.
inline ModelBundle cmd_train(const PipelineConfig& cfg, std::ostream& log = std::cout) {
    Dataset ds = ingest_dataset(cfg);
    log << "stage=ingest transactions=" << ds.transactions.size() << " books="
        << ds.catalog.size() << " vocab=" << ds.vocab_size() << "\n";

    ModelBundle bundle;
    bundle.vocab.resize(ds.vocab_size());
    for (const auto& [tok, id] : ds.vocabulary) bundle.vocab[id] = tok;

    // One LDA document per catalog book, in book-id order.
    std::vector<std::vector<std::size_t>> documents;
    for (const auto& [bid, entry] : ds.catalog) {
        bundle.book_docs.add(bid);
        bundle.book_types.push_back(entry.book_type);
        std::vector<std::size_t> doc;
        for (const auto& tok : entry.title_tokens) doc.push_back(ds.vocabulary.at(tok));
        documents.push_back(std::move(doc));
    }

    LdaConfig lda_cfg = cfg.lda;
    lda_cfg.seed = cfg.seed;
    if (!cfg.lda_sweep_ks.empty()) {
        auto sweep = sweep_topic_count(documents, ds.vocab_size(), cfg.lda_sweep_ks, lda_cfg);
        auto best = sweep.front();
        for (const auto& [k, p] : sweep)
            if (p < best.second) best = {k, p};  // ties: smallest K (sorted)
        lda_cfg.num_topics = best.first;
        log << "stage=lda_sweep chosen_k=" << best.first << " perplexity=" << best.second << "\n";
    }
    bundle.lda = LdaModel::train(documents, ds.vocab_size(), lda_cfg);
    {
        std::uint64_t ck = 0;
        for (const auto& row : bundle.lda.phi())
            ck = fnv1a(row.data(), row.size() * sizeof(double), ck ? ck : 1469598103934665603ULL);
        log << "stage=lda k=" << lda_cfg.num_topics << " checksum=" << ck << "\n";
    }

    if (!cfg.paths.pretrained_vectors.empty()) {
        auto f = detail::open_input(cfg.paths.pretrained_vectors, "pretrained_vectors");
        bundle.embeddings = load_pretrained(f);
        log << "stage=embeddings source=pretrained words=" << bundle.embeddings.size() << "\n";
    } else {
        std::vector<std::vector<std::string>> corpus;
        for (const auto& [bid, entry] : ds.catalog) {
            auto sent = entry.title_tokens;
            sent.push_back(entry.book_type);
            corpus.push_back(std::move(sent));
        }
        EmbedConfig ec = cfg.embed;
        ec.seed = cfg.seed + 101;
        if (ec.objective == EmbedConfig::Objective::full_softmax) {
            std::set<std::string> toks;
            for (const auto& s : corpus) toks.insert(s.begin(), s.end());
            if (toks.size() > 10000) ec.objective = EmbedConfig::Objective::negative_sampling;
        }
        bundle.embeddings = train_embeddings(corpus, ec);
        log << "stage=embeddings source=trained words=" << bundle.embeddings.size() << "\n";
    }

    bundle.demo_registry = DemographicRegistry::learn(ds.profiles);
    std::map<std::string, std::vector<std::string>> purchases;
    for (std::size_t i : ds.train)
        purchases[ds.transactions[i].customer_id].push_back(ds.transactions[i].book_id);
    bundle.train_purchases = purchases;

    for (const auto& [cid, profile] : ds.profiles) {
        CustomerFeatureSet fs;
        fs.customer_id = cid;
        std::vector<std::vector<double>> topics, types;
        auto it = purchases.find(cid);
        if (it != purchases.end()) {
            for (const auto& bid : it->second) {
                std::size_t doc = *bundle.book_docs.find(bid);
                topics.push_back(bundle.lda.book_topic_distribution(doc));
                types.push_back(bundle.embeddings.vector_for_type(bundle.book_types[doc]));
            }
        }
        fs.purchase_count = topics.size();
        fs.topic_pref = build_topic_preference(topics, lda_cfg.num_topics);
        fs.type_pref = build_type_preference(types, bundle.embeddings.dim());
        fs.demographics = bundle.demo_registry.encode(profile);
        fs.demo_active = bundle.demo_registry.active_categories(profile);
        bundle.features.push_back(std::move(fs));
    }
    log << "stage=preferences customers=" << bundle.features.size()
        << " embedding_misses=" << bundle.embeddings.miss_count() << "\n";

    bundle.similarity = SimilarityMatrix::build(bundle.features, cfg.weights);
    log << "stage=similarity size=" << bundle.similarity.size() << " checksum="
        << fnv1a(bundle.similarity.values().data(),
                 bundle.similarity.values().size() * sizeof(double))
        << "\n";

    std::map<std::string, std::size_t> popularity(ds.book_popularity.begin(),
                                                  ds.book_popularity.end());
    auto interactions =
        sample_negatives(purchases, popularity, cfg.lfm.negative_ratio, cfg.seed + 303);
    log << "stage=negative_sampling positives=" << interactions.positives.size()
        << " negatives=" << interactions.negatives.size()
        << " exhausted=" << interactions.exhausted_customers << "\n";

    LfmConfig lfm_cfg = cfg.lfm;
    lfm_cfg.seed = cfg.seed + 202;
    if (lfm_cfg.negative_mode == LfmConfig::NegativeMode::per_epoch_random) {
        bundle.lfm = FactorModel::train_with_resampling(
            interactions, lfm_cfg, [&](std::size_t epoch) {
                auto set = sample_negatives(purchases, popularity, lfm_cfg.negative_ratio,
                                            cfg.seed + 303 + epoch);
                // Remap onto the shared registries.
                std::vector<Interaction> negs;
                for (const auto& n : set.negatives) {
                    auto u = interactions.customers.find(set.customers.id_of(n.customer));
                    auto i = interactions.books.find(set.books.id_of(n.book));
                    if (u && i) negs.push_back({*u, *i, 0.0});
                }
                return negs;
            });
    } else {
        bundle.lfm = FactorModel::train(interactions, lfm_cfg);
    }
    log << "stage=lfm epochs=" << lfm_cfg.epochs
        << " final_loss=" << bundle.lfm.loss_trace().back() << "\n";

    bundle.config_echo = {{"seed", cfg.seed},
                          {"lda_num_topics", lda_cfg.num_topics},
                          {"embed_dim", cfg.embed.dim},
                          {"lfm_num_factors", cfg.lfm.num_factors},
                          {"lfm_lambda", cfg.lfm.lambda},
                          {"weights", {cfg.weights.topic, cfg.weights.type, cfg.weights.demographic}},
                          {"neighborhood_size", cfg.hybrid.neighborhood_size},
                          {"top_n", cfg.top_n_list}};
    save_model(bundle, std::filesystem::path(cfg.paths.model_dir) / "model.json");
    log << "stage=persist path=" << cfg.paths.model_dir << "/model.json\n";
    return bundle;
}

/// Write `customer_id,rank,book_id,score` rows for the requested customers.
inline std::string cmd_recommend(const PipelineConfig& cfg,
                                 const std::vector<std::string>& customer_ids, std::size_t top_n,
                                 std::ostream& log = std::cout) {
    ModelBundle bundle = load_model(std::filesystem::path(cfg.paths.model_dir) / "model.json");
    std::vector<std::string> candidates = bundle.book_docs.ids();
    std::sort(candidates.begin(), candidates.end());

    HybridConfig hc = cfg.hybrid;
    hc.top_n = top_n;
    std::ostringstream out;
    out << "customer_id,rank,book_id,score\n";
    for (const auto& cid : customer_ids) {
        std::set<std::string> purchased;
        auto it = bundle.train_purchases.find(cid);
        if (it != bundle.train_purchases.end())
            purchased.insert(it->second.begin(), it->second.end());
        auto rec = recommend_top_n(cid, candidates, hc, bundle.similarity, bundle.lfm, purchased);
        if (rec.empty_candidates) {
            log << "warning: no candidates left for customer " << cid << "\n";
            continue;
        }
        std::size_t rank = 1;
        for (const auto& item : rec.items)
            out << cid << ',' << rank++ << ',' << item.book_id << ','
                << detail::fmt(item.score) << '\n';
    }
    std::filesystem::create_directories(cfg.paths.report_dir);
    std::ofstream f(std::filesystem::path(cfg.paths.report_dir) / "recommendations.csv",
                    std::ios::binary);
    f << out.str();
    log << "stage=recommend customers=" << customer_ids.size() << "\n";
    return out.str();
}

inline EvalReport cmd_evaluate(const PipelineConfig& cfg, std::ostream& log = std::cout) {
    ModelBundle bundle = load_model(std::filesystem::path(cfg.paths.model_dir) / "model.json");
    Dataset ds = ingest_dataset(cfg);

    ExperimentInputs in;
    in.similarity = &bundle.similarity;
    in.lfm = &bundle.lfm;
    in.catalog_books = bundle.book_docs.ids();
    std::sort(in.catalog_books.begin(), in.catalog_books.end());
    for (const auto& [cid, books] : bundle.train_purchases)
        in.train_purchases[cid].insert(books.begin(), books.end());
    for (std::size_t i : ds.test)
        in.test_purchases[ds.transactions[i].customer_id].insert(ds.transactions[i].book_id);
    in.exclude_purchased = cfg.hybrid.exclude_purchased;

    EvalReport report =
        run_experiment(in, cfg.eval_methods, cfg.eval_neighborhoods, cfg.top_n_list);
    report.header_note =
        "directional targets from the source experiment (proprietary data, not reproducible): "
        "hybrid p~0.20 r~0.25 F~0.24; lfm-only p~0.07 r~0.08 F~0.075";
    emit_report(report, cfg.paths.report_dir);
    log << "stage=evaluate cells=" << report.cells.size() << " out=" << cfg.paths.report_dir
        << "\n";
    return report;
}

inline void cmd_synth(const SynthConfig& scfg, const std::filesystem::path& out_dir,
                      std::ostream& log = std::cout) {
    auto data = generate_synthetic(scfg);
    write_synthetic(data, out_dir);
    log << "stage=synth customers=" << scfg.customers << " books=" << scfg.books
        << " genres=" << scfg.genres << " out=" << out_dir.string() << "\n";
}

}  // namespace bookrec

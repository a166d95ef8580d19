#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bookrec/common.hpp"

namespace bookrec {

struct SynthConfig {
    std::size_t customers = 200;
    std::size_t books = 500;
    std::size_t genres = 4;
    std::size_t min_purchases = 4;
    std::size_t max_purchases = 10;  // offline retail is sparse
    std::size_t words_per_genre = 30;
    std::uint64_t seed = 7;

    void validate() const {
        if (customers == 0 || books == 0 || genres == 0)
            throw ModelError("SynthConfig: customers, books, genres must be positive");
        if (genres > books) throw ModelError("SynthConfig: more genres than books");
        if (min_purchases == 0 || min_purchases > max_purchases)
            throw ModelError("SynthConfig: bad purchase range");
    }
};

struct SynthDataset {
    std::string transactions_csv;
    std::string catalog_csv;
    std::string profiles_csv;
};

namespace detail {

inline std::string synth_word(std::mt19937_64& g) {
    static const char* syllables[] = {"ba", "do", "ka", "lu", "mi", "no", "pe", "ra",
                                      "si", "tu", "ve", "zo", "fen", "gar", "hol", "jin"};
    std::size_t n = 2 + rng_index(g, 2);
    std::string w;
    for (std::size_t i = 0; i < n; ++i) w += syllables[rng_index(g, 16)];
    return w;
}

}  // namespace detail

/// Planted-preference corpus: each genre owns a disjoint title vocabulary and
/// a type token; each customer samples a genre mixture and buys accordingly.
/// Pure function of the config, so reruns are byte-identical.
inline SynthDataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 g(cfg.seed);

    static const char* type_names[] = {"literature", "children", "science", "history",
                                       "art", "travel", "cooking", "technology"};

    // Disjoint per-genre vocabularies.
    std::vector<std::vector<std::string>> vocab(cfg.genres);
    std::set<std::string> used;
    for (std::size_t ge = 0; ge < cfg.genres; ++ge) {
        while (vocab[ge].size() < cfg.words_per_genre) {
            std::string w = "g" + std::to_string(ge) + detail::synth_word(g);
            if (used.insert(w).second) vocab[ge].push_back(w);
        }
    }
    auto genre_type = [&](std::size_t ge) {
        std::string t = type_names[ge % 8];
        if (ge >= 8) t += std::to_string(ge / 8);
        return t;
    };

    std::vector<std::size_t> book_genre(cfg.books);
    std::vector<std::vector<std::size_t>> genre_books(cfg.genres);
    std::ostringstream catalog;
    catalog << "book_id,title,book_type\n";
    for (std::size_t b = 0; b < cfg.books; ++b) {
        std::size_t ge = b < cfg.genres ? b : rng_index(g, cfg.genres);
        book_genre[b] = ge;
        genre_books[ge].push_back(b);
        std::size_t words = 3 + rng_index(g, 3);
        std::string title;
        for (std::size_t wi = 0; wi < words; ++wi) {
            if (wi) title += ' ';
            title += vocab[ge][rng_index(g, vocab[ge].size())];
        }
        catalog << 'b' << std::setw(4) << std::setfill('0') << b << ',' << title << ','
                << genre_type(ge) << '\n';
    }

    static const char* cards[] = {"store", "online", "gift"};
    static const char* contacts[] = {"phone", "email", "message"};

    std::ostringstream profiles, transactions;
    profiles << "customer_id,card_type,age,gender,contact\n";
    transactions << "customer_id,book_id,timestamp\n";
    std::int64_t base_ts = 1451606400;  // 2016-01-01
    for (std::size_t c = 0; c < cfg.customers; ++c) {
        std::ostringstream cid;
        cid << 'c' << std::setw(4) << std::setfill('0') << c;
        std::size_t primary = rng_index(g, cfg.genres);
        profiles << cid.str() << ',' << cards[rng_index(g, 3)] << ','
                 << (12 + rng_index(g, 65)) << ',' << (rng_index(g, 2) ? "male" : "female")
                 << ',' << contacts[rng_index(g, 3)] << '\n';

        std::size_t purchases =
            cfg.min_purchases + rng_index(g, cfg.max_purchases - cfg.min_purchases + 1);
        for (std::size_t t = 0; t < purchases; ++t) {
            // 80% primary genre, 20% any.
            std::size_t ge = rng_unit(g) < 0.8 ? primary : rng_index(g, cfg.genres);
            const auto& pool = genre_books[ge];
            // Within-genre popularity skew: rank r weighted 1/(r+1).
            double total = 0.0;
            for (std::size_t r = 0; r < pool.size(); ++r) total += 1.0 / static_cast<double>(r + 1);
            double x = rng_unit(g) * total, acc = 0.0;
            std::size_t pick = pool.size() - 1;
            for (std::size_t r = 0; r < pool.size(); ++r) {
                acc += 1.0 / static_cast<double>(r + 1);
                if (x < acc) {
                    pick = r;
                    break;
                }
            }
            transactions << cid.str() << ",b" << std::setw(4) << std::setfill('0') << pool[pick]
                         << ',' << (base_ts + static_cast<std::int64_t>(c * 1000 + t * 86400))
                         << '\n';
        }
    }

    return {transactions.str(), catalog.str(), profiles.str()};
}

inline void write_synthetic(const SynthDataset& data, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const char* name, const std::string& body) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw ModelError(std::string("synth: cannot write ") + name);
        f << body;
    };
    write("transactions.csv", data.transactions_csv);
    write("catalog.csv", data.catalog_csv);
    write("profiles.csv", data.profiles_csv);
}

}  // namespace bookrec

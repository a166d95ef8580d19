#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bookrec/common.hpp"

namespace bookrec {

struct TransactionRecord {
    std::string customer_id;
    std::string book_id;
    std::int64_t timestamp = 0;

    bool operator==(const TransactionRecord&) const = default;
};

struct BookCatalogEntry {
    std::string book_id;
    std::string title;
    std::string book_type;
    std::vector<std::string> title_tokens;

    bool operator==(const BookCatalogEntry&) const = default;
};

struct CustomerProfileRecord {
    std::string customer_id;
    std::string card_type;    // empty = missing
    std::optional<int> age;   // nullopt = missing
    std::string gender;       // "male", "female" or empty = unknown
    std::string contact;      // empty = missing

    bool operator==(const CustomerProfileRecord&) const = default;
};

struct RowError {
    std::size_t line;  // 1-based, header is line 1
    std::string message;
};

template <typename T>
struct ParseResult {
    std::vector<T> records;
    std::vector<RowError> row_errors;
    std::size_t duplicate_keys = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline void check_header(std::istream& in, const std::string& expected,
                         const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(what + ": empty input, missing header");
    auto got = split_csv_line(line);
    auto want = split_csv_line(expected);
    if (got != want)
        throw ParseError(what + ": bad header, expected '" + expected + "' got '" + line + "'");
}

// A parse run aborts once more than 10% of data rows are bad.
inline void check_error_budget(std::size_t errors, std::size_t rows, const std::string& what) {
    if (rows >= 10 && errors * 10 > rows)
        throw ParseError(what + ": more than 10% of rows malformed (" +
                         std::to_string(errors) + "/" + std::to_string(rows) + ")");
}

}  // namespace detail

/// Parse `customer_id,book_id,timestamp` rows. Malformed rows are collected
/// with their line numbers; the whole parse fails only on a missing/garbled
/// header or when >10% of rows are bad.
inline ParseResult<TransactionRecord> parse_transactions(std::istream& in) {
    detail::check_header(in, "customer_id,book_id,timestamp", "transactions");
    ParseResult<TransactionRecord> out;
    std::string line;
    std::size_t lineno = 1, rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        ++rows;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3) {
            out.row_errors.push_back({lineno, "expected 3 fields, got " + std::to_string(f.size())});
            continue;
        }
        if (f[0].empty() || f[1].empty()) {
            out.row_errors.push_back({lineno, "empty customer_id or book_id"});
            continue;
        }
        std::int64_t ts = 0;
        try {
            std::size_t pos = 0;
            ts = std::stoll(f[2], &pos);
            if (pos != f[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            out.row_errors.push_back({lineno, "unparsable timestamp '" + f[2] + "'"});
            continue;
        }
        if (ts < 0) {
            out.row_errors.push_back({lineno, "negative timestamp"});
            continue;
        }
        out.records.push_back({f[0], f[1], ts});
    }
    detail::check_error_budget(out.row_errors.size(), rows, "transactions");
    return out;
}

enum class TokenizerMode { whitespace, char_ngram };

/// Whitespace mode: split on whitespace/punctuation, lowercase ASCII, drop
/// empties. char_ngram mode: overlapping codepoint n-grams over the
/// punctuation-stripped string (for unsegmented scripts).
inline std::vector<std::string> tokenize_title(const std::string& title,
                                               TokenizerMode mode = TokenizerMode::whitespace,
                                               int ngram = 2) {
    auto is_break = [](unsigned char c) {
        return c < 0x80 && (std::isspace(c) || std::ispunct(c));
    };
    std::vector<std::string> tokens;
    if (mode == TokenizerMode::whitespace) {
        std::string cur;
        for (unsigned char c : title) {
            if (is_break(c)) {
                if (!cur.empty()) tokens.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                                       : static_cast<char>(c));
            }
        }
        if (!cur.empty()) tokens.push_back(cur);
        return tokens;
    }
    // char_ngram: decode UTF-8 codepoints, skipping break characters.
    std::vector<std::string> cps;
    for (std::size_t i = 0; i < title.size();) {
        unsigned char c = static_cast<unsigned char>(title[i]);
        std::size_t len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        len = std::min(len, title.size() - i);
        if (!(len == 1 && is_break(c))) cps.push_back(title.substr(i, len));
        i += len;
    }
    if (ngram < 1) throw ModelError("tokenize_title: ngram must be >= 1");
    if (cps.size() < static_cast<std::size_t>(ngram)) {
        if (!cps.empty()) {
            std::string whole;
            for (auto& cp : cps) whole += cp;
            tokens.push_back(whole);
        }
        return tokens;
    }
    for (std::size_t i = 0; i + ngram <= cps.size(); ++i) {
        std::string g;
        for (int j = 0; j < ngram; ++j) g += cps[i + j];
        tokens.push_back(g);
    }
    return tokens;
}

inline ParseResult<BookCatalogEntry> parse_catalog(std::istream& in,
                                                   TokenizerMode mode = TokenizerMode::whitespace,
                                                   int ngram = 2) {
    detail::check_header(in, "book_id,title,book_type", "catalog");
    ParseResult<BookCatalogEntry> out;
    std::unordered_map<std::string, std::size_t> seen;  // book_id -> index in records
    std::string line;
    std::size_t lineno = 1, rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        ++rows;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3) {
            out.row_errors.push_back({lineno, "expected 3 fields, got " + std::to_string(f.size())});
            continue;
        }
        if (f[0].empty() || f[1].empty()) {
            out.row_errors.push_back({lineno, "empty book_id or title"});
            continue;
        }
        BookCatalogEntry e{f[0], f[1], f[2], tokenize_title(f[1], mode, ngram)};
        if (e.title_tokens.empty()) {
            out.row_errors.push_back({lineno, "title '" + f[1] + "' tokenizes to nothing"});
            continue;
        }
        auto it = seen.find(e.book_id);
        if (it != seen.end()) {
            out.records[it->second] = std::move(e);  // last wins
            ++out.duplicate_keys;
        } else {
            seen.emplace(e.book_id, out.records.size());
            out.records.push_back(std::move(e));
        }
    }
    detail::check_error_budget(out.row_errors.size(), rows, "catalog");
    return out;
}

inline ParseResult<CustomerProfileRecord> parse_profiles(std::istream& in) {
    detail::check_header(in, "customer_id,card_type,age,gender,contact", "profiles");
    ParseResult<CustomerProfileRecord> out;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 1, rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        ++rows;
        auto f = detail::split_csv_line(line);
        if (f.size() != 5) {
            out.row_errors.push_back({lineno, "expected 5 fields, got " + std::to_string(f.size())});
            continue;
        }
        if (f[0].empty()) {
            out.row_errors.push_back({lineno, "empty customer_id"});
            continue;
        }
        CustomerProfileRecord r;
        r.customer_id = f[0];
        r.card_type = f[1];
        if (!f[2].empty()) {
            try {
                std::size_t pos = 0;
                int age = std::stoi(f[2], &pos);
                if (pos == f[2].size() && age >= 0 && age <= 150) r.age = age;
            } catch (const std::exception&) {
                // age stays missing, row kept
            }
        }
        if (f[3] == "male" || f[3] == "female") r.gender = f[3];
        r.contact = f[4];
        auto it = seen.find(r.customer_id);
        if (it != seen.end()) {
            out.records[it->second] = std::move(r);
            ++out.duplicate_keys;
        } else {
            seen.emplace(r.customer_id, out.records.size());
            out.records.push_back(std::move(r));
        }
    }
    detail::check_error_budget(out.row_errors.size(), rows, "profiles");
    return out;
}

struct SplitPolicy {
    enum class Kind { per_customer_tail, global_random } kind = Kind::per_customer_tail;
    double fraction = 0.2;
    std::uint64_t seed = 0;  // global_random only
};

/// Deterministic train/test partition over transaction indices.
/// per_customer_tail: per customer, purchases sorted by timestamp (file order
/// breaks ties); the last ceil(fraction*count) go to test; customers with <2
/// purchases stay entirely in train.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_test(
    const std::vector<TransactionRecord>& transactions, const SplitPolicy& policy) {
    if (transactions.empty()) throw ModelError("split_train_test: no transactions");
    if (!(policy.fraction > 0.0 && policy.fraction < 1.0))
        throw ModelError("split_train_test: fraction must be in (0,1)");

    std::vector<std::size_t> train, test;
    if (policy.kind == SplitPolicy::Kind::global_random) {
        std::vector<std::size_t> idx(transactions.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937_64 g(policy.seed);
        rng_shuffle(idx, g);
        std::size_t n_test = static_cast<std::size_t>(
            std::ceil(policy.fraction * static_cast<double>(idx.size())));
        if (n_test >= idx.size()) n_test = idx.size() - 1;
        std::set<std::size_t> test_set(idx.begin(), idx.begin() + n_test);
        for (std::size_t i = 0; i < transactions.size(); ++i)
            (test_set.count(i) ? test : train).push_back(i);
        return {train, test};
    }

    std::map<std::string, std::vector<std::size_t>> by_customer;
    for (std::size_t i = 0; i < transactions.size(); ++i)
        by_customer[transactions[i].customer_id].push_back(i);
    std::vector<char> in_test(transactions.size(), 0);
    for (auto& [cid, idx] : by_customer) {
        if (idx.size() < 2) continue;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return transactions[a].timestamp < transactions[b].timestamp;
        });
        std::size_t n_test = static_cast<std::size_t>(
            std::ceil(policy.fraction * static_cast<double>(idx.size())));
        if (n_test >= idx.size()) n_test = idx.size() - 1;
        for (std::size_t j = idx.size() - n_test; j < idx.size(); ++j) in_test[idx[j]] = 1;
    }
    for (std::size_t i = 0; i < transactions.size(); ++i)
        (in_test[i] ? test : train).push_back(i);
    return {train, test};
}

struct Dataset {
    std::vector<TransactionRecord> transactions;
    std::map<std::string, BookCatalogEntry> catalog;
    std::map<std::string, CustomerProfileRecord> profiles;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::unordered_map<std::string, std::size_t> vocabulary;  // token -> id in [0,V)
    std::map<std::string, std::size_t> book_popularity;       // train purchase counts

    std::size_t vocab_size() const { return vocabulary.size(); }
};

/// Assemble a Dataset from parsed tables. Transactions referencing unknown
/// books are rejected. Customers without a profile get an all-missing one.
inline Dataset build_dataset(std::vector<TransactionRecord> transactions,
                             const std::vector<BookCatalogEntry>& catalog,
                             const std::vector<CustomerProfileRecord>& profiles,
                             const SplitPolicy& policy) {
    Dataset ds;
    for (const auto& e : catalog) ds.catalog[e.book_id] = e;
    for (auto& t : transactions) {
        if (!ds.catalog.count(t.book_id))
            throw ModelError("transaction references unknown book '" + t.book_id + "'");
    }
    ds.transactions = std::move(transactions);
    for (const auto& p : profiles) ds.profiles[p.customer_id] = p;
    for (const auto& t : ds.transactions) {
        if (!ds.profiles.count(t.customer_id)) {
            CustomerProfileRecord blank;
            blank.customer_id = t.customer_id;
            ds.profiles[t.customer_id] = blank;
        }
    }
    // Vocabulary over catalog title tokens, in catalog id order.
    for (const auto& [bid, e] : ds.catalog) {
        for (const auto& tok : e.title_tokens) {
            if (!ds.vocabulary.count(tok)) {
                std::size_t id = ds.vocabulary.size();
                ds.vocabulary.emplace(tok, id);
            }
        }
    }
    auto [train, test] = split_train_test(ds.transactions, policy);
    ds.train = std::move(train);
    ds.test = std::move(test);
    for (std::size_t i : ds.train) ++ds.book_popularity[ds.transactions[i].book_id];
    return ds;
}

}  // namespace bookrec

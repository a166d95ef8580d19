#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bookrec/common.hpp"
#include "bookrec/data_ingest.hpp"

namespace bookrec {

/// Fixed category layout for the four one-hot demographic blocks. Card-type
/// and contact categories are learned from the data; age buckets and gender
/// are fixed. "unknown" is the last position of every block.
class DemographicRegistry {
public:
    static constexpr std::size_t kNumFields = 4;
    // Half-open buckets [0,20), [20,40), [40,60), [60,inf), + unknown.
    static constexpr std::size_t kAgeBuckets = 5;
    static constexpr std::size_t kGenderCats = 3;  // male, female, unknown

    DemographicRegistry() = default;

    template <typename ProfileMap>
    static DemographicRegistry learn(const ProfileMap& profiles) {
        DemographicRegistry r;
        std::set<std::string> cards, contacts;
        for (const auto& [cid, p] : profiles) {
            if (!p.card_type.empty()) cards.insert(p.card_type);
            if (!p.contact.empty()) contacts.insert(p.contact);
        }
        r.card_types_.assign(cards.begin(), cards.end());
        r.contacts_.assign(contacts.begin(), contacts.end());
        return r;
    }

    const std::vector<std::string>& card_types() const { return card_types_; }
    const std::vector<std::string>& contacts() const { return contacts_; }

    void set_categories(std::vector<std::string> card_types, std::vector<std::string> contacts) {
        card_types_ = std::move(card_types);
        contacts_ = std::move(contacts);
    }

    std::size_t vector_size() const {
        return (card_types_.size() + 1) + kAgeBuckets + kGenderCats + (contacts_.size() + 1);
    }

    /// Active category index per field: {card, age bucket, gender, contact}.
    std::array<std::size_t, kNumFields> active_categories(
        const CustomerProfileRecord& p) const {
        std::array<std::size_t, kNumFields> a{};
        a[0] = lookup(card_types_, p.card_type);
        a[1] = !p.age ? kAgeBuckets - 1 : *p.age < 20 ? 0 : *p.age < 40 ? 1 : *p.age < 60 ? 2 : 3;
        a[2] = p.gender == "male" ? 0 : p.gender == "female" ? 1 : 2;
        a[3] = lookup(contacts_, p.contact);
        return a;
    }

    std::vector<double> encode(const CustomerProfileRecord& p) const {
        auto a = active_categories(p);
        std::vector<double> v(vector_size(), 0.0);
        std::size_t off = 0;
        v[off + a[0]] = 1.0;
        off += card_types_.size() + 1;
        v[off + a[1]] = 1.0;
        off += kAgeBuckets;
        v[off + a[2]] = 1.0;
        off += kGenderCats;
        v[off + a[3]] = 1.0;
        return v;
    }

private:
    static std::size_t lookup(const std::vector<std::string>& cats, const std::string& value) {
        if (!value.empty()) {
            auto it = std::lower_bound(cats.begin(), cats.end(), value);
            if (it != cats.end() && *it == value)
                return static_cast<std::size_t>(it - cats.begin());
        }
        return cats.size();  // unknown slot
    }

    std::vector<std::string> card_types_;  // sorted
    std::vector<std::string> contacts_;    // sorted
};

struct CustomerFeatureSet {
    std::string customer_id;
    std::vector<double> topic_pref;  // length K, simplex when purchase_count > 0
    std::vector<double> type_pref;   // length m
    std::vector<double> demographics;
    std::array<std::size_t, DemographicRegistry::kNumFields> demo_active{};
    std::size_t purchase_count = 0;
};

/// Mean of purchased books' topic distributions (duplicates counted).
/// Cold start: uniform 1/K.
inline std::vector<double> build_topic_preference(
    const std::vector<std::vector<double>>& purchased_topics, std::size_t num_topics) {
    if (purchased_topics.empty())
        return std::vector<double>(num_topics, 1.0 / static_cast<double>(num_topics));
    std::vector<double> mean(num_topics, 0.0);
    for (const auto& p : purchased_topics) {
        if (p.size() != num_topics)
            throw ModelError("build_topic_preference: dimension mismatch");
        for (std::size_t k = 0; k < num_topics; ++k) mean[k] += p[k];
    }
    for (double& x : mean) x /= static_cast<double>(purchased_topics.size());
    return mean;
}

/// Mean of purchased books' type vectors. Cold start: zero vector.
inline std::vector<double> build_type_preference(
    const std::vector<std::vector<double>>& purchased_type_vectors, std::size_t dim) {
    if (purchased_type_vectors.empty()) return std::vector<double>(dim, 0.0);
    std::vector<double> mean(dim, 0.0);
    for (const auto& v : purchased_type_vectors) {
        if (v.size() != dim) throw ModelError("build_type_preference: dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) mean[j] += v[j];
    }
    for (double& x : mean) x /= static_cast<double>(purchased_type_vectors.size());
    return mean;
}

}  // namespace bookrec

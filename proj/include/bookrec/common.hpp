#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bookrec {

// Thrown for malformed inputs (bad CSV, bad config, bad file contents).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for invalid arguments or inconsistent model state at run time.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bijective string-id <-> dense-index registry shared by all models.
class IndexRegistry {
public:
    std::size_t add(const std::string& id) {
        auto it = map_.find(id);
        if (it != map_.end()) return it->second;
        std::size_t i = ids_.size();
        map_.emplace(id, i);
        ids_.push_back(id);
        return i;
    }

    std::optional<std::size_t> find(const std::string& id) const {
        auto it = map_.find(id);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& id_of(std::size_t index) const { return ids_.at(index); }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::unordered_map<std::string, std::size_t> map_;
    std::vector<std::string> ids_;
};

// Uniform double in [0,1) from the top 53 bits; identical across platforms,
// unlike std::uniform_real_distribution.
inline double rng_unit(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform index in [0, n) by rejection.
inline std::size_t rng_index(std::mt19937_64& g, std::size_t n) {
    if (n == 0) throw ModelError("rng_index: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = g();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

// Deterministic Fisher-Yates; std::shuffle output is implementation-defined.
template <typename T>
void rng_shuffle(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng_index(g, i)]);
    }
}

// FNV-1a, used for content checksums in stage logs and for deriving
// order-independent per-document fold-in seeds.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace bookrec

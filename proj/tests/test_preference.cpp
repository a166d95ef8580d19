#include <doctest.h>

#include <map>

#include "bookrec/preference.hpp"

using namespace bookrec;

TEST_CASE("topic preference is the mean of purchased distributions") {
    auto p = build_topic_preference({{1, 0}, {0, 1}}, 2);
    CHECK(p == std::vector<double>{0.5, 0.5});
}

TEST_CASE("single purchase passes through unchanged") {
    auto p = build_topic_preference({{0.2, 0.8}}, 2);
    CHECK(p == std::vector<double>{0.2, 0.8});
}

TEST_CASE("empty purchases give the uniform cold-start vector") {
    CHECK(build_topic_preference({}, 4) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
}

TEST_CASE("type preference mean and cold start") {
    CHECK(build_type_preference({{2, 0}, {0, 2}}, 2) == std::vector<double>{1, 1});
    CHECK(build_type_preference({{3, 1}, {3, 1}}, 2) == std::vector<double>{3, 1});
    CHECK(build_type_preference({}, 3) == std::vector<double>{0, 0, 0});
}

TEST_CASE("property: mean of simplex vectors stays on the simplex") {
    std::mt19937_64 g(13);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t k = 2 + rng_index(g, 6);
        std::vector<std::vector<double>> points;
        std::size_t n = 1 + rng_index(g, 5);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v(k);
            double s = 0;
            for (double& x : v) {
                x = rng_unit(g) + 1e-9;
                s += x;
            }
            for (double& x : v) x /= s;
            points.push_back(v);
        }
        auto mean = build_topic_preference(points, k);
        double s = 0;
        for (double x : mean) {
            CHECK(x >= 0.0);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("means are permutation-invariant and duplicates count double") {
    std::vector<double> a{1, 0}, b{0, 1};
    CHECK(build_topic_preference({a, b}, 2) == build_topic_preference({b, a}, 2));
    auto dup = build_topic_preference({a, a, b}, 2);
    CHECK(dup[0] == doctest::Approx(2.0 / 3.0));
}

namespace {

std::map<std::string, CustomerProfileRecord> sample_profiles() {
    CustomerProfileRecord a{"c1", "store", 35, "male", "phone"};
    CustomerProfileRecord b{"c2", "online", 20, "female", "email"};
    CustomerProfileRecord c{"c3", "", std::nullopt, "", ""};
    return {{"c1", a}, {"c2", b}, {"c3", c}};
}

}  // namespace

TEST_CASE("age 35 lands in the [20,40) bucket") {
    auto reg = DemographicRegistry::learn(sample_profiles());
    CustomerProfileRecord p{"x", "store", 35, "male", "phone"};
    CHECK(reg.active_categories(p)[1] == 1);
}

TEST_CASE("age exactly 20 uses the half-open rule") {
    auto reg = DemographicRegistry::learn(sample_profiles());
    CustomerProfileRecord p{"x", "store", 20, "male", "phone"};
    CHECK(reg.active_categories(p)[1] == 1);
    p.age = 19;
    CHECK(reg.active_categories(p)[1] == 0);
    p.age = 120;  // top bucket absorbs 100+
    CHECK(reg.active_categories(p)[1] == 3);
}

TEST_CASE("missing gender maps to the unknown position") {
    auto reg = DemographicRegistry::learn(sample_profiles());
    CustomerProfileRecord p{"x", "store", 35, "", "phone"};
    CHECK(reg.active_categories(p)[2] == 2);
}

TEST_CASE("encode emits exactly one active position per field") {
    auto profiles = sample_profiles();
    auto reg = DemographicRegistry::learn(profiles);
    for (const auto& [cid, p] : profiles) {
        auto v = reg.encode(p);
        CHECK(v.size() == reg.vector_size());
        double s = 0;
        for (double x : v) s += x;
        CHECK(s == doctest::Approx(4.0));
    }
}

TEST_CASE("encode is injective over differing registered categories") {
    auto profiles = sample_profiles();
    auto reg = DemographicRegistry::learn(profiles);
    std::vector<std::vector<double>> seen;
    for (const auto& [cid, p] : profiles) {
        auto v = reg.encode(p);
        for (const auto& prev : seen) CHECK(v != prev);
        seen.push_back(v);
    }
}

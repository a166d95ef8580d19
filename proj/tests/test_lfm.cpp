#include <doctest.h>

#include <random>

#include "bookrec/lfm.hpp"

using namespace bookrec;

TEST_CASE("negative sampling: popularity-proportional draw frequency") {
    std::map<std::string, std::size_t> pop{{"A", 3}, {"B", 1}};
    std::map<std::string, std::vector<std::string>> positives{{"c1", {"C"}}};
    pop["C"] = 1;  // C is owned by c1, never drawn
    std::size_t a_draws = 0, trials = 10000;
    for (std::size_t s = 0; s < trials; ++s) {
        auto set = sample_negatives(positives, pop, 1.0, s);
        REQUIRE(set.negatives.size() == 1);
        if (set.books.id_of(set.negatives[0].book) == "A") ++a_draws;
    }
    double freq = static_cast<double>(a_draws) / static_cast<double>(trials);
    CHECK(freq == doctest::Approx(0.75).epsilon(0.07));
}

TEST_CASE("ratio 1 balances positives and negatives per customer") {
    std::map<std::string, std::size_t> pop;
    for (int b = 0; b < 50; ++b) pop["b" + std::to_string(b)] = 1 + b % 5;
    std::map<std::string, std::vector<std::string>> positives{
        {"c1", {"b0", "b1", "b2"}}, {"c2", {"b3"}}};
    auto set = sample_negatives(positives, pop, 1.0, 42);
    CHECK(set.negatives.size() == set.positives.size());
    // distinct negatives, never positives
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& n : set.negatives) {
        CHECK(seen.insert({n.customer, n.book}).second);
        for (const auto& p : set.positives)
            CHECK(!(p.customer == n.customer && p.book == n.book));
    }
}

TEST_CASE("customer owning the whole pool gets zero negatives and a warning") {
    std::map<std::string, std::size_t> pop{{"A", 2}, {"B", 1}};
    std::map<std::string, std::vector<std::string>> positives{{"c1", {"A", "B"}}};
    auto set = sample_negatives(positives, pop, 1.0, 0);
    CHECK(set.negatives.empty());
    CHECK(set.exhausted_customers == 1);
}

TEST_CASE("sampling is deterministic given seed") {
    std::map<std::string, std::size_t> pop;
    for (int b = 0; b < 20; ++b) pop["b" + std::to_string(b)] = 1 + b;
    std::map<std::string, std::vector<std::string>> positives{{"c1", {"b0", "b5"}}};
    auto a = sample_negatives(positives, pop, 2.0, 77);
    auto b = sample_negatives(positives, pop, 2.0, 77);
    CHECK(a.negatives == b.negatives);
}

namespace {

InteractionSet fully_observed_2x2() {
    // target matrix [[1,0],[0,1]]
    InteractionSet s;
    std::size_t c0 = s.customers.add("u0"), c1 = s.customers.add("u1");
    std::size_t b0 = s.books.add("i0"), b1 = s.books.add("i1");
    s.positives = {{c0, b0, 1.0}, {c1, b1, 1.0}};
    s.negatives = {{c0, b1, 0.0}, {c1, b0, 0.0}};
    return s;
}

}  // namespace

TEST_CASE("rank-1-representable 2x2 target converges below 1e-2") {
    LfmConfig cfg;
    cfg.num_factors = 2;
    cfg.lambda = 0.0;
    cfg.lr0 = 0.05;
    cfg.lr_decay = 0.0;
    cfg.epochs = 500;
    cfg.seed = 1;
    auto m = FactorModel::train(fully_observed_2x2(), cfg);
    CHECK(m.loss_trace().back() < 1e-2);
}

TEST_CASE("huge lambda shrinks every prediction toward zero") {
    LfmConfig cfg;
    cfg.num_factors = 2;
    cfg.lambda = 10.0;
    cfg.lr0 = 0.01;
    cfg.epochs = 200;
    cfg.seed = 2;
    auto m = FactorModel::train(fully_observed_2x2(), cfg);
    CHECK(std::abs(m.predict("u0", "i0").value) < 1e-3);
    CHECK(std::abs(m.predict("u1", "i1").value) < 1e-3);
}

TEST_CASE("predict is the inner product of factor rows") {
    InteractionSet s = fully_observed_2x2();
    LfmConfig cfg;
    cfg.num_factors = 2;
    cfg.epochs = 1;
    auto m = FactorModel::train(s, cfg);
    m.mutable_customer_factors()[0] = {1, 2};
    m.mutable_book_factors()[0] = {3, 4};
    CHECK(m.predict("u0", "i0").value == 11.0);
    m.mutable_book_factors()[1] = {0, 0};
    CHECK(m.predict("u0", "i1").value == 0.0);
    CHECK(m.predict("u1", "i1").value == 0.0);
}

TEST_CASE("unknown entities score 0 with the cold flag") {
    auto m = FactorModel::train(fully_observed_2x2(), LfmConfig{});
    auto r = m.predict("u0", "never-seen");
    CHECK(r.value == 0.0);
    CHECK(r.cold);
    CHECK(!m.predict("u0", "i0").cold);
}

TEST_CASE("compute_loss worked examples") {
    InteractionSet s;
    std::size_t u = s.customers.add("u"), i = s.books.add("i");
    LfmConfig cfg;
    cfg.num_factors = 2;
    cfg.epochs = 1;
    s.positives = {{u, i, 1.0}};
    auto m = FactorModel::train(s, cfg);

    m.mutable_customer_factors()[0] = {1, 0};
    m.mutable_book_factors()[0] = {1, 0};
    CHECK(FactorModel::compute_loss(m, {{0, 0, 1.0}}, 0.0) == 0.0);
    CHECK(FactorModel::compute_loss(m, {{0, 0, 1.0}}, 0.01) == doctest::Approx(0.02));

    m.mutable_customer_factors()[0] = {0.5, 0};
    CHECK(FactorModel::compute_loss(m, {{0, 0, 1.0}}, 0.0) == doctest::Approx(0.25));
}

TEST_CASE("gradient check: per-pair analytic gradients vs central differences") {
    std::mt19937_64 g(99);
    const std::size_t F = 3;
    for (int point = 0; point < 20; ++point) {
        std::vector<double> p(F), q(F);
        for (double& x : p) x = rng_unit(g) * 2 - 1;
        for (double& x : q) x = rng_unit(g) * 2 - 1;
        double r = point % 2 ? 1.0 : 0.0;
        double lambda = 0.01;
        auto loss = [&] {
            double rh = 0;
            for (std::size_t k = 0; k < F; ++k) rh += p[k] * q[k];
            double err = r - rh, reg = 0;
            for (std::size_t k = 0; k < F; ++k) reg += p[k] * p[k] + q[k] * q[k];
            return err * err + lambda * reg;
        };
        double rh = 0;
        for (std::size_t k = 0; k < F; ++k) rh += p[k] * q[k];
        double err = r - rh;
        const double h = 1e-6;
        for (std::size_t k = 0; k < F; ++k) {
            double analytic_p = -2 * err * q[k] + 2 * lambda * p[k];
            double save = p[k];
            p[k] = save + h;
            double up = loss();
            p[k] = save - h;
            double down = loss();
            p[k] = save;
            CHECK(analytic_p == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));

            double analytic_q = -2 * err * p[k] + 2 * lambda * q[k];
            save = q[k];
            q[k] = save + h;
            up = loss();
            q[k] = save - h;
            down = loss();
            q[k] = save;
            CHECK(analytic_q == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
        }
    }
}

TEST_CASE("small-rate loss trace is non-increasing after epoch 3") {
    // 4x4 fully observed identity-ish target.
    InteractionSet s;
    for (int u = 0; u < 4; ++u) s.customers.add("u" + std::to_string(u));
    for (int i = 0; i < 4; ++i) s.books.add("i" + std::to_string(i));
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t i = 0; i < 4; ++i)
            (u == i ? s.positives : s.negatives).push_back({u, i, u == i ? 1.0 : 0.0});
    LfmConfig cfg;
    cfg.num_factors = 3;
    cfg.lambda = 0.0;
    cfg.lr0 = 0.005;
    cfg.lr_decay = 0.0;
    cfg.epochs = 60;
    cfg.seed = 4;
    auto m = FactorModel::train(s, cfg);
    const auto& trace = m.loss_trace();
    for (std::size_t e = 4; e < trace.size(); ++e) CHECK(trace[e] <= trace[e - 1] + 1e-12);
}

TEST_CASE("training is bit-deterministic given seed") {
    LfmConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 123;
    auto a = FactorModel::train(fully_observed_2x2(), cfg);
    auto b = FactorModel::train(fully_observed_2x2(), cfg);
    CHECK(a.customer_factors() == b.customer_factors());
    CHECK(a.book_factors() == b.book_factors());
}

TEST_CASE("fixed negatives no worse than per-epoch random on a synthetic instance") {
    // 100x100 planted block structure, 4 blocks; positives inside a
    // customer's block.
    std::map<std::string, std::vector<std::string>> positives;
    std::map<std::string, std::size_t> pop;
    std::mt19937_64 g(555);
    for (int b = 0; b < 100; ++b) pop["b" + std::to_string(b)] = 0;
    for (int u = 0; u < 100; ++u) {
        int block = u % 4;
        std::string cid = "c" + std::to_string(u);
        for (int t = 0; t < 6; ++t) {
            int book = block * 25 + static_cast<int>(rng_index(g, 25));
            std::string bid = "b" + std::to_string(book);
            positives[cid].push_back(bid);
            ++pop[bid];
        }
    }
    std::vector<double> fixed_losses, random_losses;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto set = sample_negatives(positives, pop, 1.0, 1000 + seed);
        LfmConfig cfg;
        cfg.num_factors = 5;
        cfg.lambda = 0.01;
        cfg.epochs = 40;
        cfg.seed = seed;
        auto fixed = FactorModel::train(set, cfg);
        fixed_losses.push_back(fixed.loss_trace().back());

        auto random = FactorModel::train_with_resampling(set, cfg, [&](std::size_t epoch) {
            auto rs = sample_negatives(positives, pop, 1.0, 2000 + seed * 100 + epoch);
            std::vector<Interaction> negs;
            for (const auto& n : rs.negatives) {
                auto u = set.customers.find(rs.customers.id_of(n.customer));
                auto i = set.books.find(rs.books.id_of(n.book));
                if (u && i) negs.push_back({*u, *i, 0.0});
            }
            return negs;
        });
        random_losses.push_back(random.loss_trace().back());
    }
    std::sort(fixed_losses.begin(), fixed_losses.end());
    std::sort(random_losses.begin(), random_losses.end());
    CHECK(fixed_losses[2] <= random_losses[2]);
}

TEST_CASE("diverging configuration raises instead of returning NaN factors") {
    LfmConfig cfg;
    cfg.num_factors = 2;
    cfg.lr0 = 50.0;  // way past stable
    cfg.lr_decay = 0.0;
    cfg.epochs = 200;
    cfg.seed = 5;
    CHECK_THROWS_AS(FactorModel::train(fully_observed_2x2(), cfg), ModelError);
}

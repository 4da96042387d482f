#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "hfit/data.hpp"
#include "hfit/de.hpp"
#include "hfit/error.hpp"
#include "hfit/tree.hpp"
#include "oracles.hpp"

using namespace hfit;

namespace {

double sphere(std::span<const double> w)
{
    return std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
}

} // namespace

TEST_CASE("trial vector construction")
{
    Rng rng(1);
    const auto a = oracle::random_vector(rng, 12, -1.0, 1.0);
    const auto b = oracle::random_vector(rng, 12, -1.0, 1.0);
    const auto c = oracle::random_vector(rng, 12, -1.0, 1.0);
    const auto g = oracle::random_vector(rng, 12, -1.0, 1.0);
    auto mutant = [&](std::size_t j, double F) { return a[j] + F * (g[j] - a[j]) + F * (b[j] - c[j]); };

    SUBCASE("cr = 1 mutates every slot")
    {
        const auto t = de_trial(a, b, c, g, 0.7, 1.0, rng);
        for (std::size_t j = 0; j < a.size(); ++j) {
            CHECK(t[j] == mutant(j, 0.7));
        }
    }
    SUBCASE("cr = 0 mutates exactly one slot")
    {
        std::vector<int> hits(a.size(), 0);
        for (int i = 0; i < 1200; ++i) {
            const auto t = de_trial(a, b, c, g, 0.7, 0.0, rng);
            int changed = 0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                if (t[j] != a[j]) {
                    ++changed;
                    ++hits[j];
                    REQUIRE(t[j] == mutant(j, 0.7));
                }
            }
            REQUIRE(changed == 1);
        }
        for (auto h : hits) {
            CHECK(h > 50); // forced index is uniform: expected 100 each
        }
    }
    SUBCASE("F = 0 returns w_a")
    {
        const auto t = de_trial(a, b, c, g, 0.0, 0.9, rng);
        CHECK(t == a);
    }
    SUBCASE("length mismatch")
    {
        const std::vector<double> shorter(5, 0.0);
        CHECK_THROWS_AS((void)de_trial(a, shorter, c, g, 0.7, 0.9, rng), Error);
    }
}

TEST_CASE("sphere function converges")
{
    DEConfig cfg;
    cfg.stall_window = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(seed);
        const auto start = oracle::random_vector(rng, 10, -1.0, 1.0);
        const auto r = de_optimize(sphere, start, cfg, rng);
        CHECK(r.best_fitness < 1e-3);
        CHECK(sphere(r.best) == r.best_fitness);
    }
}

TEST_CASE("history is monotone and starts with the initial population")
{
    DEConfig cfg;
    cfg.max_iters = 300;
    cfg.init_spread = 0.5;
    Rng rng(4);
    const auto start = oracle::random_vector(rng, 6, -1.0, 1.0);
    const auto r = de_optimize(sphere, start, cfg, rng);
    REQUIRE(r.history.size() >= 2);
    CHECK(r.history.front().iteration == 0);
    CHECK(r.history.front().best_fitness <= sphere(start));
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        REQUIRE(r.history[i].best_fitness <= r.history[i - 1].best_fitness);
        REQUIRE(r.history[i].iteration == i);
        if (r.history[i].best_fitness < r.history[i - 1].best_fitness) {
            REQUIRE(r.history[i].stall == 0);
        } else {
            REQUIRE(r.history[i].stall == r.history[i - 1].stall + 1);
        }
    }
    CHECK(r.history.back().best_fitness == r.best_fitness);
}

TEST_CASE("stall window stops the search")
{
    DEConfig cfg;
    cfg.stall_window = 1;
    Rng rng(2);
    const std::vector<double> start(4, 0.5);
    const auto r = de_optimize([](std::span<const double>) { return 3.0; }, start, cfg, rng);
    CHECK(r.history.size() == 2); // initial population plus one idle iteration
    CHECK(r.history.back().stall == 1);

    cfg.stall_window = 25;
    const auto s = de_optimize([](std::span<const double>) { return 3.0; }, start, cfg, rng);
    CHECK(s.history.size() == 26);
}

TEST_CASE("seed member is kept verbatim and perturbations respect the unit mask")
{
    DEConfig cfg;
    cfg.max_iters = 0;
    cfg.init_spread = 0.5;
    const std::vector<double> start { 0.0, 1.0, 5.0 };
    const std::vector<bool> mask { true, true, false };
    std::vector<std::vector<double>> seen;
    auto record = [&](std::span<const double> w) {
        seen.emplace_back(w.begin(), w.end());
        return sphere(w);
    };
    Rng rng(8);
    (void)de_optimize(record, start, cfg, rng, mask);
    REQUIRE(seen.size() == cfg.pop_size);
    CHECK(seen[0] == start);
    bool any_outside = false;
    for (std::size_t i = 1; i < seen.size(); ++i) {
        REQUIRE(seen[i][0] >= 0.0);
        REQUIRE(seen[i][1] <= 1.0);
        REQUIRE(std::abs(seen[i][2] - 5.0) <= 0.5);
        any_outside = any_outside || std::abs(seen[i][2] - 5.0) > 0.25;
    }
    CHECK(any_outside);
}

TEST_CASE("fixed seed reproduces bit for bit, independent of threads")
{
    DEConfig cfg;
    cfg.max_iters = 200;
    const std::vector<double> start(8, 0.3);
    Rng a(17);
    const auto r1 = de_optimize(sphere, start, cfg, a);
    Rng b(17);
    const auto r2 = de_optimize(sphere, start, cfg, b);
    cfg.threads = 4;
    Rng c(17);
    const auto r3 = de_optimize(sphere, start, cfg, c);
    CHECK(r1.best == r2.best);
    CHECK(r1.best == r3.best);
    CHECK(r1.best_fitness == r3.best_fitness);
}

TEST_CASE("invalid inputs")
{
    Rng rng(1);
    const std::vector<double> start(3, 0.0);
    DEConfig cfg;
    cfg.pop_size = 3;
    CHECK_THROWS_AS((void)de_optimize(sphere, start, cfg, rng), Error);
    cfg = {};
    CHECK_THROWS_AS((void)de_optimize([](std::span<const double>) { return NAN; }, start, cfg, rng), Error);
    CHECK_THROWS_AS((void)de_optimize(sphere, std::vector<double> {}, cfg, rng), Error);
    CHECK_THROWS_AS((void)de_optimize(sphere, start, cfg, rng, std::vector<bool>(2, true)), Error);
}

TEST_CASE("tuning a tree keeps its topology and improves the fit")
{
    const auto train = normalize(gen_plant(80, 10).first);
    Rng rng(3);
    TreeConfig tc;
    tc.kind = FisKind::type2;
    tc.limits = { 2, 3, 2 };
    const auto tree = random_tree(rng, tc);
    const CompiledTree compiled(tree);
    const auto seed = flatten_parameters(tree);
    DEConfig cfg;
    cfg.max_iters = 150;
    const auto r = de_optimize(
        [&](std::span<const double> w) { return compiled.rmse(w, train.inputs, train.targets); }, seed, cfg, rng,
        membership_mask(tree));
    const auto tuned = load_parameters(tree, r.best);
    CHECK(parameter_count(tuned) == parameter_count(tree));
    CHECK(node_count(tuned) == node_count(tree));
    CHECK(oracle::leaf_scan(tuned) == oracle::leaf_scan(tree));
    CHECK(r.best_fitness <= compiled.rmse(seed, train.inputs, train.targets));
    CHECK(rmse(train.targets, evaluate_tree(tuned, train.inputs)) == doctest::Approx(r.best_fitness).epsilon(1e-12));
}

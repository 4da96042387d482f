#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "hfit/data.hpp"
#include "hfit/error.hpp"
#include "oracles.hpp"

using namespace hfit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name, const std::string& text)
{
    const auto dir = fs::temp_directory_path() / "hfit-test-data";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

ErrorKind kind_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::invalid_argument;
}

// Pearson r from raw sums in long double, a different formulation from the
// centered two-pass one used by the library.
double raw_sum_correlation(const std::vector<double>& d, const std::vector<double>& y)
{
    long double sd = 0, sy = 0, sdd = 0, syy = 0, sdy = 0;
    const auto n = static_cast<long double>(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        sd += d[i];
        sy += y[i];
        sdd += static_cast<long double>(d[i]) * d[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sdy += static_cast<long double>(d[i]) * y[i];
    }
    const long double cov = sdy - sd * sy / n;
    return static_cast<double>(cov / std::sqrt((sdd - sd * sd / n) * (syy - sy * sy / n)));
}

} // namespace

TEST_CASE("plant benchmark")
{
    const auto y = plant_series(401);
    CHECK(y[0] == 0.0);
    const double u1 = std::sin(2.0 * std::numbers::pi / 100.0);
    CHECK(y[1] == doctest::Approx(u1 * u1 * u1).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(0.000248).epsilon(1e-3));
    for (double v : y) {
        REQUIRE(std::abs(v) <= 1.5);
    }

    const auto [train, test] = gen_plant(200, 200);
    CHECK(train.size() == 200);
    CHECK(test.size() == 200);
    CHECK(train.features() == 2);
    // Pattern k: (u(k), y(k)) -> y(k + 1).
    CHECK(train.inputs(0, 1) == 0.0);
    CHECK(train.targets[0] == y[1]);
    CHECK(train.inputs(0, 0) == u1);
    for (std::size_t i = 1; i < train.size(); ++i) {
        REQUIRE(train.inputs(i, 1) == train.targets[i - 1]);
    }
    CHECK(test.inputs(0, 1) == train.targets.back());
    CHECK(test.targets.back() == y[400]);
    CHECK(test.inputs(0, 0) == doctest::Approx(std::sin(2.0 * std::numbers::pi * 201.0 / 100.0)));
}

TEST_CASE("Mackey-Glass benchmark")
{
    const auto s = mackey_glass_series(30.0, 1.2, 1123);
    CHECK(s.size() == 1124);
    CHECK(s[0] == 1.2);
    CHECK(s[1] < s[0]); // 0.2 * 1.2 / (1 + 1.2^10) - 0.12 < 0
    // Before any delayed value leaves the constant history the solution is
    // x(t) = c + (x0 - c) e^{-t/10} with c = 2 * 1.2 / (1 + 1.2^10).
    const double c = 2.0 * 1.2 / (1.0 + std::pow(1.2, 10));
    for (int k = 1; k <= 30; ++k) {
        REQUIRE(s[static_cast<std::size_t>(k)] == doctest::Approx(c + (1.2 - c) * std::exp(-k / 10.0)).epsilon(1e-9));
    }

    SUBCASE("halving the step changes sampled values by less than 1e-6 relative")
    {
        const auto half = mackey_glass_series(30.0, 1.2, 1123, 0.05);
        for (std::size_t k = 0; k < s.size(); ++k) {
            REQUIRE(std::abs(s[k] - half[k]) <= 1e-6 * std::abs(half[k]));
        }
    }
    SUBCASE("pattern layout")
    {
        const auto ds = gen_mackey_glass(30.0, 1.2, 124, 1123);
        CHECK(ds.size() == 1000);
        CHECK(ds.features() == 4);
        for (std::size_t i = 0; i < ds.size(); i += 37) {
            const std::size_t k = 124 + i;
            REQUIRE(ds.inputs(i, 0) == s[k - 24]);
            REQUIRE(ds.inputs(i, 1) == s[k - 18]);
            REQUIRE(ds.inputs(i, 2) == s[k - 12]);
            REQUIRE(ds.inputs(i, 3) == s[k - 6]);
            REQUIRE(ds.targets[i] == s[k]);
        }
    }
    SUBCASE("deterministic")
    {
        CHECK(mackey_glass_series(30.0, 1.2, 1123) == s);
    }
    CHECK(kind_of([] { (void)gen_mackey_glass(17.0, 1.2, 124, 1123); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { (void)gen_mackey_glass(30.0, 1.2, 500, 400); }) == ErrorKind::invalid_argument);
}

TEST_CASE("Box-Jenkins regressors")
{
    const std::vector<double> u { 0, 1, 2, 3, 4, 5, 6 };
    const std::vector<double> y { 10, 11, 12, 13, 14, 15, 16 };
    const auto ds = box_jenkins_patterns(u, y);
    CHECK(ds.size() == 3);
    CHECK(ds.inputs(0, 0) == 13.0); // y(k-1), k = 4
    CHECK(ds.inputs(0, 1) == 0.0);  // u(k-4)
    CHECK(ds.targets[0] == 14.0);
    CHECK(kind_of([&] { (void)box_jenkins_patterns(u, std::vector<double>(3)); }) == ErrorKind::length_mismatch);
}

TEST_CASE("Gaussian noise")
{
    Rng rng(5);
    const std::vector<double> clean(100000, 0.7);
    CHECK(add_gaussian_noise(clean, 0.0, rng) == clean);
    const auto noisy = add_gaussian_noise(clean, 0.2, rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        mean += noisy[i] - clean[i];
    }
    const double n = static_cast<double>(clean.size());
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double e = noisy[i] - clean[i] - mean;
        var += e * e;
    }
    const double sd = std::sqrt(var / (n - 1.0));
    CHECK(std::abs(sd - 0.2) < 0.02 * 0.2);
    CHECK(std::abs(mean) < 3.0 * 0.2 / std::sqrt(n));
    CHECK(kind_of([&] { (void)add_gaussian_noise(clean, -1.0, rng); }) == ErrorKind::invalid_argument);
}

TEST_CASE("CSV loading")
{
    SUBCASE("hand-written file with header and CRLF")
    {
        const auto p = scratch("small.csv", "a,b,t\r\n1,2,3\r\n# comment\r\n\r\n4.5,-6,7e-1\r\n8,9,10\r\n");
        const auto ds = load_csv(p, { "a", "b" }, "t", true);
        REQUIRE(ds.size() == 3);
        CHECK(ds.feature_names == std::vector<std::string> { "a", "b" });
        CHECK(ds.inputs(1, 0) == 4.5);
        CHECK(ds.inputs(1, 1) == -6.0);
        CHECK(ds.targets[1] == 0.7);
        CHECK(ds.targets[2] == 10.0);
    }
    SUBCASE("columns by index and default inputs")
    {
        const auto p = scratch("noheader.csv", "1,2,3\n4,5,6\n");
        const auto ds = load_csv(p, {}, "1", false);
        CHECK(ds.features() == 2);
        CHECK(ds.inputs(1, 0) == 4.0);
        CHECK(ds.inputs(1, 1) == 6.0);
        CHECK(ds.targets[1] == 5.0);
    }
    SUBCASE("wide file")
    {
        std::string text;
        for (int c = 0; c < 301; ++c) {
            text += (c ? "," : "") + std::string("c") + std::to_string(c);
        }
        text += "\n";
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 301; ++c) {
                text += (c ? "," : "") + std::to_string(r * c);
            }
            text += "\n";
        }
        const auto ds = load_csv(scratch("wide.csv", text), {}, "c300", true);
        CHECK(ds.features() == 300);
        CHECK(ds.targets[3] == 900.0);
    }
    SUBCASE("distinct error kinds")
    {
        CHECK(kind_of([] { (void)load_csv("/nonexistent/file.csv", {}, "0", false); }) == ErrorKind::file_not_found);
        const auto ragged = scratch("ragged.csv", "1,2,3\n4,5\n");
        CHECK(kind_of([&] { (void)load_csv(ragged, {}, "2", false); }) == ErrorKind::ragged_row);
        const auto text = scratch("text.csv", "1,2,3\n4,5,abc\n");
        try {
            (void)load_csv(text, {}, "2", false);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::non_numeric);
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
        CHECK(kind_of([&] { (void)load_csv(text, {}, "nope", false); }) == ErrorKind::invalid_argument);
    }
    SUBCASE("write and read back")
    {
        Dataset ds;
        ds.feature_names = { "p", "q" };
        ds.inputs.append_row(std::vector<double> { 0.1, 1.0 / 3.0 });
        ds.inputs.append_row(std::vector<double> { -2.5, 1e-300 });
        ds.targets = { 3.0, 4.0 };
        const auto p = fs::temp_directory_path() / "hfit-test-data" / "roundtrip.csv";
        write_csv(p, ds);
        const auto back = load_csv(p, { "p", "q" }, "target", true);
        CHECK(back.inputs == ds.inputs);
        CHECK(back.targets == ds.targets);
    }
}

TEST_CASE("normalization")
{
    Dataset ds;
    ds.inputs.append_row(std::vector<double> { 0.0, 5.0, 2.0 });
    ds.inputs.append_row(std::vector<double> { 1.0, 5.0, 4.0 });
    ds.inputs.append_row(std::vector<double> { 0.5, 5.0, 3.0 });
    ds.targets = { 10.0, 20.0, 30.0 };
    const auto n = normalize(ds);
    CHECK(n.inputs(2, 0) == 0.5); // already in [0, 1]
    CHECK(n.inputs(0, 1) == 0.5); // constant column
    CHECK(n.inputs(2, 2) == 0.5);
    CHECK(n.targets == ds.targets);
    CHECK(n.scaler.target_min == 10.0);
    CHECK(n.scaler.target_max == 30.0);

    Dataset outside;
    outside.inputs.append_row(std::vector<double> { -1.0, 7.0, 9.0 });
    outside.targets = { 0.0 };
    const auto o = apply_scaler(outside, n.scaler);
    CHECK(o.inputs(0, 0) == 0.0);
    CHECK(o.inputs(0, 2) == 1.0);

    Rng rng(1);
    Dataset r;
    for (int i = 0; i < 100; ++i) {
        r.inputs.append_row(oracle::random_vector(rng, 3, -50.0, 50.0));
        r.targets.push_back(0.0);
    }
    const auto rn = normalize(r);
    const auto back = denormalize_inputs(rn.inputs, rn.scaler);
    for (std::size_t i = 0; i < 100; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            REQUIRE(rn.inputs(i, j) >= 0.0);
            REQUIRE(rn.inputs(i, j) <= 1.0);
            REQUIRE(std::abs(back(i, j) - r.inputs(i, j)) <= 1e-12 * std::max(1.0, std::abs(r.inputs(i, j))));
        }
    }
    CHECK(kind_of([] { (void)normalize(Dataset {}); }) == ErrorKind::invalid_argument);
}

TEST_CASE("splitting")
{
    Rng rng(3);
    auto disjoint_cover = [](const Partition& p, std::size_t n) {
        std::set<std::size_t> all(p.train.begin(), p.train.end());
        for (auto i : p.test) {
            if (!all.insert(i).second) {
                return false;
            }
        }
        return all.size() == n && *all.rbegin() == n - 1;
    };
    SUBCASE("holdout")
    {
        const auto parts = split(392, Holdout { 0.5 }, rng);
        REQUIRE(parts.size() == 1);
        CHECK(parts[0].train.size() == 196);
        CHECK(parts[0].test.size() == 196);
        CHECK(disjoint_cover(parts[0], 392));
    }
    SUBCASE("fixed keeps order")
    {
        const auto parts = split(1000, FixedSplit { 500 }, rng);
        REQUIRE(parts[0].train.size() == 500);
        for (std::size_t i = 0; i < 500; ++i) {
            REQUIRE(parts[0].train[i] == i);
            REQUIRE(parts[0].test[i] == 500 + i);
        }
    }
    SUBCASE("k-fold")
    {
        const auto folds = split(747, KFold { 10 }, rng);
        REQUIRE(folds.size() == 10);
        std::multiset<std::size_t> tested;
        for (const auto& f : folds) {
            CHECK((f.test.size() == 74 || f.test.size() == 75));
            CHECK(disjoint_cover(f, 747));
            tested.insert(f.test.begin(), f.test.end());
        }
        CHECK(tested.size() == 747);
        CHECK(std::set<std::size_t>(tested.begin(), tested.end()).size() == 747);
    }
    SUBCASE("none")
    {
        const auto parts = split(5, NoSplit {}, rng);
        CHECK(parts[0].train == parts[0].test);
    }
    SUBCASE("seeded")
    {
        Rng a(9);
        Rng b(9);
        CHECK(split(100, Holdout { 0.7 }, a)[0].train == split(100, Holdout { 0.7 }, b)[0].train);
    }
    SUBCASE("infeasible")
    {
        CHECK(kind_of([&] { (void)split(10, FixedSplit { 10 }, rng); }) == ErrorKind::invalid_argument);
        CHECK(kind_of([&] { (void)split(5, KFold { 6 }, rng); }) == ErrorKind::invalid_argument);
        CHECK(kind_of([&] { (void)split(10, Holdout { 1.0 }, rng); }) == ErrorKind::invalid_argument);
        CHECK(kind_of([&] { (void)split(0, NoSplit {}, rng); }) == ErrorKind::invalid_argument);
    }
}

TEST_CASE("metrics")
{
    const std::vector<double> d { 1, 2, 3 };
    CHECK(rmse(d, d) == 0.0);
    CHECK(rmse(std::vector<double> { 0, 0 }, std::vector<double> { 1, 1 }) == 1.0);
    CHECK(rmse(d, std::vector<double> { 2, 3, 4 }) == 1.0);
    CHECK(kind_of([&] { (void)rmse(d, std::vector<double> { 1 }); }) == ErrorKind::length_mismatch);

    CHECK(correlation(d, d) == doctest::Approx(1.0));
    CHECK(correlation(d, std::vector<double> { 5, 4, 3 }) == doctest::Approx(-1.0));
    CHECK(kind_of([&] { (void)correlation(d, std::vector<double> { 2, 2, 2 }); }) == ErrorKind::degenerate);

    Rng rng(6);
    for (int t = 0; t < 100; ++t) {
        const auto a = oracle::random_vector(rng, 200, -1.0, 1.0);
        auto b = oracle::random_vector(rng, 200, -1.0, 1.0);
        for (std::size_t i = 0; i < b.size(); ++i) {
            b[i] += 0.5 * a[i];
        }
        REQUIRE(std::abs(correlation(a, b) - raw_sum_correlation(a, b)) <= 1e-12);

        // Joint permutation leaves rmse unchanged.
        auto pa = a;
        auto pb = b;
        for (std::size_t i = pa.size(); i > 1; --i) {
            const auto k = uniform_index(rng, i);
            std::swap(pa[i - 1], pa[k]);
            std::swap(pb[i - 1], pb[k]);
        }
        REQUIRE(rmse(pa, pb) == doctest::Approx(rmse(a, b)).epsilon(1e-14));
    }
}

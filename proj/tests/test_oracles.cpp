#include <cmath>

#include "distreg/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using distreg::Rng;

TEST_CASE("brute_force_w1: identical sets and unit shifts") {
    CHECK(oracles::brute_force_w1({1.0, 2.0, 3.0}, {3.0, 1.0, 2.0}) == doctest::Approx(0.0));
    CHECK(oracles::brute_force_w1({0.0, 0.0}, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(oracles::brute_force_w1({0.0, 1.0}, {0.0, 3.0}) == doctest::Approx(1.0));
}

TEST_CASE("brute_force_w1: sorted pairing attains the minimum (exhaustive)") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.uniform(-5.0, 5.0);
        for (auto& v : b) v = rng.uniform(-5.0, 5.0);
        std::vector<double> sa = a, sb = b;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        double sorted_cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) sorted_cost += std::fabs(sa[i] - sb[i]);
        sorted_cost /= static_cast<double>(n);
        CHECK(oracles::brute_force_w1(a, b) == doctest::Approx(sorted_cost).epsilon(1e-12));
    }
}

TEST_CASE("dense_cdf_integral: closed-form point-mass cases") {
    auto r = oracles::dense_cdf_integral({0.0}, {1.0});
    CHECK(r.w1 == doctest::Approx(1.0));
    CHECK(r.cramer == doctest::Approx(1.0));

    r = oracles::dense_cdf_integral({0.0, 1.0}, {0.0, 3.0});
    CHECK(r.w1 == doctest::Approx(1.0));
    CHECK(r.cramer == doctest::Approx(0.5));  // gap 0.5 on [1,3)

    // unequal sizes
    r = oracles::dense_cdf_integral({0.0, 1.0}, {0.0, 1.0, 2.0});
    CHECK(r.w1 == doctest::Approx(0.5));
}

TEST_CASE("dense_cdf_integral: symmetric and grid-consistent") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(8), b(5);
        for (auto& v : a) v = rng.uniform(-3.0, 3.0);
        for (auto& v : b) v = rng.uniform(-3.0, 3.0);
        const auto ab = oracles::dense_cdf_integral(a, b, 200000);  // throws if inconsistent
        const auto ba = oracles::dense_cdf_integral(b, a);
        CHECK(ab.w1 == doctest::Approx(ba.w1).epsilon(1e-12));
        CHECK(ab.cramer == doctest::Approx(ba.cramer).epsilon(1e-12));
    }
}

TEST_CASE("finite_diff_grad: quadratic and linear references") {
    auto quad = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    const auto g = oracles::finite_diff_grad(quad, {1.0, 2.0});
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));

    auto linear = [](const std::vector<double>& x) { return 3.0 * x[0] - 7.0 * x[1]; };
    const auto gl = oracles::finite_diff_grad(linear, {0.3, -0.4});
    CHECK(gl[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(gl[1] == doctest::Approx(-7.0).epsilon(1e-10));
}

TEST_CASE("exhaustive_2means_1d: known partitions") {
    auto r = oracles::exhaustive_2means_1d({0.0, 0.0, 10.0, 10.0});
    CHECK(r.c_low == doctest::Approx(0.0));
    CHECK(r.c_high == doctest::Approx(10.0));
    CHECK(r.sse == doctest::Approx(0.0));

    r = oracles::exhaustive_2means_1d({1.0, 2.0, 3.0, 100.0});
    CHECK(r.c_low == doctest::Approx(2.0));
    CHECK(r.c_high == doctest::Approx(100.0));

    // permutation invariance
    auto r2 = oracles::exhaustive_2means_1d({100.0, 3.0, 1.0, 2.0});
    CHECK(r2.c_low == doctest::Approx(r.c_low));
    CHECK(r2.c_high == doctest::Approx(r.c_high));
}

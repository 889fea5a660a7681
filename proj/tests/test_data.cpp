#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unistd.h>

#include "distreg/data.hpp"
#include "distreg/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace distreg;
using namespace distreg::data;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("distreg_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("gen_inverse_square: deterministic, spans the target range") {
    Dataset a = gen_inverse_square(10000, 0.5, 7);
    Dataset b = gen_inverse_square(10000, 0.5, 7);
    CHECK(a.features.data() == b.features.data());
    CHECK(a.targets == b.targets);

    const auto [lo, hi] = std::minmax_element(a.targets.begin(), a.targets.end());
    CHECK(*lo >= -3.0);
    CHECK(*hi <= 3.0);
    CHECK(*lo < -2.9);
    CHECK(*hi > 2.9);
    const double mean = std::accumulate(a.targets.begin(), a.targets.end(), 0.0) / 10000.0;
    CHECK(std::fabs(mean) < 0.1);

    // noiseless limit: the informative feature is exactly y^2
    Dataset clean = gen_inverse_square(100, 0.0, 3);
    for (std::size_t i = 0; i < clean.n(); ++i)
        CHECK(clean.features(i, 0) == doctest::Approx(clean.targets[i] * clean.targets[i]));
}

TEST_CASE("gen_two_path: circle identity and conditional bimodality") {
    Dataset clean = gen_two_path(200, 5.0, 0.0, 11);
    for (std::size_t i = 0; i < clean.n(); ++i) {
        const double r2 = clean.features(i, 0) * clean.features(i, 0) +
                          clean.targets[i] * clean.targets[i];
        CHECK(r2 == doctest::Approx(25.0).epsilon(1e-9));
    }

    Dataset ds = gen_two_path(10000, 5.0, 0.3, 13);
    Dataset ds2 = gen_two_path(10000, 5.0, 0.3, 13);
    CHECK(ds.features.data() == ds2.features.data());

    // y | (|x| < 0.5) concentrates near +-5: clearly bimodal
    std::vector<double> slice;
    for (std::size_t i = 0; i < ds.n(); ++i)
        if (std::fabs(ds.features(i, 0)) < 0.5) slice.push_back(ds.targets[i]);
    REQUIRE(slice.size() > 100);
    CHECK(metrics::bimodality_coefficient(slice) > 0.555);
}

TEST_CASE("gen_unimodal_linear: linear signal plus noise") {
    Dataset ds = gen_unimodal_linear(5000, 3.0, 0.5, 17);
    // regression slope of y on x0 should be close to 3
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        sxy += ds.features(i, 0) * ds.targets[i];
        sxx += ds.features(i, 0) * ds.features(i, 0);
    }
    CHECK(sxy / sxx == doctest::Approx(3.0).epsilon(0.02));
    CHECK(metrics::bimodality_coefficient(ds.targets) < 0.555);
}

TEST_CASE("kmeans2_1d: known clusters and the exhaustive oracle") {
    auto r = kmeans2_1d({0.0, 0.0, 10.0, 10.0}, 0);
    CHECK(r.c_low == doctest::Approx(0.0));
    CHECK(r.c_high == doctest::Approx(10.0));

    r = kmeans2_1d({1.0, 2.0, 3.0, 100.0}, 0);
    CHECK(r.c_low == doctest::Approx(2.0));
    CHECK(r.c_high == doctest::Approx(100.0));

    // order invariance
    auto shuffled = kmeans2_1d({100.0, 3.0, 2.0, 1.0}, 0);
    CHECK(shuffled.c_low == doctest::Approx(r.c_low));
    CHECK(shuffled.c_high == doctest::Approx(r.c_high));

    CHECK_THROWS_AS(kmeans2_1d({5.0, 5.0, 5.0}, 0), ContractError);

    // random inputs: Lloyd's from percentile init lands on the optimal
    // threshold partition found by the exhaustive scan
    Rng rng(179);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 4 + trial % 47;
        std::vector<double> values(n);
        const double sep = rng.uniform(0.0, 6.0);
        for (auto& v : values)
            v = rng.bernoulli(0.5) ? rng.normal(-sep / 2.0, 1.0) : rng.normal(sep / 2.0, 1.0);
        const auto ours = kmeans2_1d(values, 0);
        const auto oracle = oracles::exhaustive_2means_1d(values);
        CHECK(ours.c_low == doctest::Approx(oracle.c_low).epsilon(1e-9));
        CHECK(ours.c_high == doctest::Approx(oracle.c_high).epsilon(1e-9));
    }
}

TEST_CASE("inject_separation: identity, saturation, interpolation") {
    Dataset ds = gen_unimodal_linear(2000, 3.0, 0.5, 19);
    assign_split(ds, {0.7, 0.15, 0.15}, 23);

    // S = 0 keeps the original distribution
    Dataset id = ds;
    inject_separation(id, 0.0, 1);
    CHECK(id.targets == ds.targets);

    // S = 1 forces the two exact boundary values
    Dataset sat = ds;
    const SeparationConfig cfg = fit_separation(sat, 1.0, 1);
    inject_separation(sat, cfg);
    for (std::size_t i = 0; i < sat.n(); ++i) {
        const bool low = ds.targets[i] <= cfg.c_mid;
        CHECK(sat.targets[i] == doctest::Approx(low ? cfg.y_min : cfg.y_max));
    }
    // and the train targets become detectably bimodal
    CHECK(metrics::bimodality_coefficient(sat.gather_targets(sat.split.train)) > 0.555);

    // S = 0.5 hand value: y=4, bounds [0,10], above the midpoint -> 7
    SeparationConfig hand;
    hand.S = 0.5;
    hand.c_mid = 2.0;
    hand.y_min = 0.0;
    hand.y_max = 10.0;
    Dataset tiny;
    tiny.features = Matrix(1, 1);
    tiny.targets = {4.0};
    inject_separation(tiny, hand);
    CHECK(tiny.targets[0] == doctest::Approx(7.0));
}

TEST_CASE("inject_separation: per-branch monotonicity") {
    Dataset ds = gen_unimodal_linear(500, 3.0, 0.5, 29);
    assign_split(ds, {0.7, 0.15, 0.15}, 23);
    for (double S : {0.25, 0.5, 0.9}) {
        Dataset inj = ds;
        const SeparationConfig cfg = fit_separation(inj, S, 1);
        inject_separation(inj, cfg);
        // sort originals per branch; the transform must preserve order
        std::vector<std::pair<double, double>> lo, hi;
        for (std::size_t i = 0; i < ds.n(); ++i)
            (ds.targets[i] <= cfg.c_mid ? lo : hi).push_back({ds.targets[i], inj.targets[i]});
        for (auto* branch : {&lo, &hi}) {
            std::sort(branch->begin(), branch->end());
            for (std::size_t i = 0; i + 1 < branch->size(); ++i)
                CHECK((*branch)[i].second <= (*branch)[i + 1].second + 1e-12);
        }
    }
}

TEST_CASE("zscore: round-trip, train stats, leak-free") {
    Dataset ds = gen_two_path(1000, 5.0, 0.3, 31);
    assign_split(ds, {0.7, 0.15, 0.15}, 37);
    const std::vector<double> original_targets = ds.targets;
    zscore_fit_transform(ds);

    // train column means vanish, train std is 1
    const auto train_y = ds.gather_targets(ds.split.train);
    double mean = std::accumulate(train_y.begin(), train_y.end(), 0.0) /
                  static_cast<double>(train_y.size());
    CHECK(std::fabs(mean) < 1e-12);

    // inverse transform restores the raw units
    const auto restored = zscore_inverse(ds.targets, ds.scaler_y);
    for (std::size_t i = 0; i < restored.size(); ++i)
        CHECK(std::fabs(restored[i] - original_targets[i]) < 1e-10);

    CHECK_THROWS_AS(zscore_fit_transform(ds), ContractError);  // double transform
}

TEST_CASE("zscore: validation split keeps its own (shifted) statistics") {
    // build a dataset whose val rows are deliberately shifted; after scaling
    // with train statistics the val mean must stay away from zero
    Dataset ds;
    ds.features = Matrix(200, 1);
    ds.targets.resize(200);
    for (std::size_t i = 0; i < 200; ++i) {
        const bool is_val = i >= 140 && i < 170;
        ds.features(i, 0) = is_val ? 10.0 + 0.01 * static_cast<double>(i) : 0.01 * static_cast<double>(i);
        ds.targets[i] = ds.features(i, 0);
        if (i < 140)
            ds.split.train.push_back(i);
        else if (i < 170)
            ds.split.val.push_back(i);
        else
            ds.split.test.push_back(i);
    }
    zscore_fit_transform(ds);
    const auto val_y = ds.gather_targets(ds.split.val);
    const double val_mean = std::accumulate(val_y.begin(), val_y.end(), 0.0) / 30.0;
    CHECK(std::fabs(val_mean) > 1.0);

    // scaler stats come from train rows only: permuting val/test leaves them fixed
    Dataset ds2;
    ds2.features = Matrix(200, 1);
    ds2.targets.resize(200);
    for (std::size_t i = 0; i < 200; ++i) {
        ds2.features(i, 0) = ds.features(i, 0);
        ds2.targets[i] = 99.0;  // val/test junk
    }
    ds2.split = ds.split;
    for (std::size_t i : ds2.split.train) ds2.targets[i] = zscore_inverse({ds.targets[i]}, ds.scaler_y)[0];
    zscore_fit_transform(ds2);
    CHECK(ds2.scaler_y.mean[0] == doctest::Approx(ds.scaler_y.mean[0]).epsilon(1e-12));
    CHECK(ds2.scaler_y.stddev[0] == doctest::Approx(ds.scaler_y.stddev[0]).epsilon(1e-12));
}

TEST_CASE("zscore: constant feature columns are clamped, not dropped") {
    Dataset ds;
    ds.features = Matrix(50, 2);
    ds.targets.resize(50);
    for (std::size_t i = 0; i < 50; ++i) {
        ds.features(i, 0) = 4.2;  // constant
        ds.features(i, 1) = static_cast<double>(i);
        ds.targets[i] = static_cast<double>(i);
        (i < 30 ? ds.split.train : (i < 40 ? ds.split.val : ds.split.test)).push_back(i);
    }
    zscore_fit_transform(ds);
    CHECK(ds.dim() == 2);
    for (std::size_t i = 0; i < 50; ++i) CHECK(ds.features(i, 0) == doctest::Approx(0.0));
}

TEST_CASE("assign_split: disjoint cover, reproducibility, ratio counts") {
    Dataset ds = gen_unimodal_linear(1000, 3.0, 0.5, 41);
    assign_split(ds, {0.7, 0.15, 0.15}, 43);
    CHECK(ds.split.train.size() == 700);
    CHECK(ds.split.val.size() == 150);
    CHECK(ds.split.test.size() == 150);

    std::vector<bool> seen(1000, false);
    for (const auto* part : {&ds.split.train, &ds.split.val, &ds.split.test})
        for (std::size_t i : *part) {
            CHECK(!seen[i]);
            seen[i] = true;
        }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));

    Dataset ds2 = gen_unimodal_linear(1000, 3.0, 0.5, 41);
    assign_split(ds2, {0.7, 0.15, 0.15}, 43);
    CHECK(ds.split.train == ds2.split.train);

    Dataset tiny = gen_unimodal_linear(3, 3.0, 0.5, 1);
    CHECK_THROWS_AS(assign_split(tiny, {0.99, 0.005, 0.005}, 1), ContractError);
    CHECK_THROWS_AS(assign_split(ds, {0.5, 0.4, 0.4}, 1), ContractError);
}

TEST_CASE("csv: write/load round-trip") {
    TempDir tmp;
    const auto path = (tmp.path / "fixture.csv").string();
    Dataset ds;
    ds.features = Matrix(3, 2);
    ds.features(0, 0) = 1.25;
    ds.features(0, 1) = -2.0;
    ds.features(1, 0) = 0.1;
    ds.features(1, 1) = 1e-3;
    ds.features(2, 0) = 123456.789;
    ds.features(2, 1) = -0.6180339887498949;
    ds.targets = {0.5, -1.5, 2.25};
    ds.feature_names = {"x0", "x1"};
    write_csv(path, ds);

    const Dataset loaded = load_csv(path, "y");
    CHECK(loaded.n() == 3);
    CHECK(loaded.dim() == 2);
    CHECK(loaded.feature_names == std::vector<std::string>{"x0", "x1"});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded.targets[i] == ds.targets[i]);
        for (std::size_t j = 0; j < 2; ++j) CHECK(loaded.features(i, j) == ds.features(i, j));
    }

    // explicit feature selection drops columns
    const Dataset partial = load_csv(path, "y", {"x1"});
    CHECK(partial.dim() == 1);
    CHECK(partial.features(1, 0) == 1e-3);
}

TEST_CASE("csv: parse errors name the row and column") {
    TempDir tmp;
    const auto path = (tmp.path / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "x0,y\n1.0,2.0\n3.5,oops\n";
    }
    try {
        load_csv(path, "y");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column y") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "x0,y\n1.0\n";
    }
    CHECK_THROWS_AS(load_csv(path, "y"), ParseError);
    CHECK_THROWS_AS(load_csv(path, "missing"), ParseError);
}

TEST_CASE("csv: 1280-column embedding fixture loads with d=1280") {
    TempDir tmp;
    const auto path = (tmp.path / "embeddings.csv").string();
    {
        std::ofstream out(path);
        for (int j = 0; j < 1280; ++j) out << "f" << j << ",";
        out << "y\n";
        Rng rng(47);
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 1280; ++j) out << rng.uniform(-1.0, 1.0) << ",";
            out << rng.uniform(0.0, 1.0) << "\n";
        }
    }
    const Dataset ds = load_csv(path, "y");
    CHECK(ds.n() == 10);
    CHECK(ds.dim() == 1280);
    CHECK(ds.feature_names[0] == "f0");
    CHECK(ds.feature_names[1279] == "f1279");
}

TEST_CASE("error_target_from_probability") {
    CHECK(error_target_from_probability(1.0) == doctest::Approx(0.0));
    CHECK(error_target_from_probability(0.0) == doctest::Approx(1.0));
    CHECK(error_target_from_probability(0.83) == doctest::Approx(0.17));
    CHECK_THROWS_AS(error_target_from_probability(-0.1), ContractError);
    CHECK_THROWS_AS(error_target_from_probability(1.1), ContractError);
}

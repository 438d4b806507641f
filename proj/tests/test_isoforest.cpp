#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "nids/isoforest.hpp"

using namespace nids;
using namespace nids::isoforest;
using nids::preprocess::FeatureMatrix;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& rows, std::vector<int> ids = {},
                          std::vector<std::string> classes = {}) {
    FeatureMatrix m;
    m.values = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m.values(i, j) = rows[i][j];
    if (ids.empty()) ids.assign(rows.size(), 0);
    if (classes.empty()) classes = {"all"};
    m.class_ids = std::move(ids);
    m.class_names = std::move(classes);
    for (std::size_t j = 0; j < m.values.cols; ++j) m.feature_names.push_back("f" + std::to_string(j));
    return m;
}

// expected remaining path length for the point at sorted index `target`,
// over the exhaustive distribution of uniform splits on one feature
double oracle_expected_path(const std::vector<double>& pts, int lo, int hi, int target, int depth, int limit) {
    const int size = hi - lo + 1;
    if (size == 1) return 0.0;
    if (depth >= limit) return average_path_length(size);
    const double span = pts[hi] - pts[lo];
    double e = 0.0;
    for (int j = lo; j < hi; ++j) {
        const double p = (pts[j + 1] - pts[j]) / span;
        if (target <= j)
            e += p * (1.0 + oracle_expected_path(pts, lo, j, target, depth + 1, limit));
        else
            e += p * (1.0 + oracle_expected_path(pts, j + 1, hi, target, depth + 1, limit));
    }
    return e;
}

} // namespace

TEST_CASE("c(n) boundary values are exact") {
    CHECK(average_path_length(1) == 0.0);
    CHECK(average_path_length(2) == 1.0);
    CHECK_THROWS_AS(average_path_length(0), Error);
}

TEST_CASE("c(256) matches an independent evaluation of the formula") {
    // summed in reverse order with long doubles: a different floating path
    long double harmonic = 0.0L;
    for (int i = 255; i >= 1; --i) harmonic += 1.0L / i;
    const double expected = static_cast<double>(2.0L * harmonic - 2.0L * 255.0L / 256.0L);
    CHECK(average_path_length(256) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("the harmonic approximation above n=1000 stays close to the exact sum") {
    const long long n = 1500;
    long double harmonic = 0.0L;
    for (long long i = 1; i < n; ++i) harmonic += 1.0L / i;
    const double exact = static_cast<double>(2.0L * harmonic - 2.0L * (n - 1) / n);
    CHECK(average_path_length(n) == doctest::Approx(exact).epsilon(1e-3));
}

TEST_CASE("two identical rows make single-external-node trees") {
    FeatureMatrix X = make_matrix({{1.0, 2.0}, {1.0, 2.0}});
    IsoForest f = fit(X, 50, 2, 3);
    for (const IsoTree& t : f.trees) {
        REQUIRE(t.nodes.size() == 1);
        CHECK(t.nodes[0].is_external());
        CHECK(t.nodes[0].size == 2);
    }
    // zero-spread node: mean path is c(2)=1, score is exp2(-1) = 0.5 exactly
    CHECK(path_length(f.trees[0], X.values.row(0)) == 1.0);
    CHECK(score(f, X.values.row(0)) == 0.5);
}

TEST_CASE("mean path equal to c(psi) gives score exactly 0.5") {
    // four identical rows, one tree: the tree is a single external node of
    // size 4, so the mean path is exactly c(4) = c(psi) and 2^(-1) = 0.5
    FeatureMatrix X = make_matrix({{3.0}, {3.0}, {3.0}, {3.0}});
    IsoForest f = fit(X, 1, 4, 5);
    CHECK(score(f, X.values.row(0)) == 0.5);
}

TEST_CASE("psi=2 on two distinct rows isolates both at depth 1") {
    FeatureMatrix X = make_matrix({{0.0}, {1.0}});
    IsoForest f = fit(X, 40, 2, 9);
    CHECK(f.height_limit == 1);
    for (const IsoTree& t : f.trees) {
        REQUIRE(t.nodes.size() == 3);
        CHECK_FALSE(t.nodes[0].is_external());
    }
    CHECK(path_length(f.trees[0], X.values.row(0)) == 1.0);
    CHECK(path_length(f.trees[0], X.values.row(1)) == 1.0);
}

TEST_CASE("forest shape, determinism and validation") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 400; ++i) rows.push_back({u(eng), u(eng), u(eng)});
    FeatureMatrix X = make_matrix(rows);

    IsoForest f = fit(X, 100, 256, 11);
    CHECK(f.trees.size() == 100);
    CHECK(f.psi == 256);
    CHECK(f.height_limit == 8);

    f.save("isoforest_a.json");
    IsoForest g = fit(X, 100, 256, 11);
    g.save("isoforest_b.json");
    std::ifstream fa("isoforest_a.json"), fb("isoforest_b.json");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());

    CHECK_THROWS_AS(fit(X, 100, 401, 1), Error); // psi > rows
    CHECK_THROWS_AS(fit(X, 100, 1, 1), Error);
    CHECK_THROWS_AS(fit(X, 0, 16, 1), Error);
}

TEST_CASE("scores stay in (0,1) and shrink as mean path grows") {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> g(0, 1);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 300; ++i) rows.push_back({g(eng), g(eng)});
    FeatureMatrix X = make_matrix(rows);
    IsoForest f = fit(X, 100, 128, 7);
    for (std::size_t i = 0; i < X.n_rows(); ++i) {
        const double s = score(f, X.values.row(i));
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    // monotonicity in the mean path, directly from the formula
    const double c = average_path_length(f.psi);
    CHECK(std::exp2(-1.0 / c) > std::exp2(-2.0 / c));
}

TEST_CASE("a planted outlier scores higher than the sample mean point over 5 seeds") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 eng(seed * 131);
        std::normal_distribution<double> g(0, 1);
        std::vector<std::vector<double>> rows;
        double mx = 0, my = 0;
        for (int i = 0; i < 500; ++i) {
            rows.push_back({g(eng), g(eng)});
            mx += rows.back()[0];
            my += rows.back()[1];
        }
        rows.push_back({10.0, 10.0}); // the outlier
        FeatureMatrix X = make_matrix(rows);
        IsoForest f = fit(X, 100, 256, seed);
        const double outlier = score(f, X.values.row(500));
        const std::vector<double> center{mx / 500, my / 500};
        const double central = score(f, std::span<const double>(center.data(), 2));
        CHECK(outlier > central);
    }
}

TEST_CASE("average outlier path is shorter than a central point's") {
    std::mt19937_64 eng(17);
    std::normal_distribution<double> g(0, 1);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 400; ++i) rows.push_back({g(eng), g(eng)});
    rows.push_back({8.0, -8.0});
    FeatureMatrix X = make_matrix(rows);
    IsoForest f = fit(X, 200, 128, 23);
    double outlier_mean = 0, center_mean = 0;
    const std::vector<double> center{0.0, 0.0};
    for (const IsoTree& t : f.trees) {
        outlier_mean += path_length(t, X.values.row(400));
        center_mean += path_length(t, std::span<const double>(center.data(), 2));
    }
    CHECK(outlier_mean < center_mean);
}

TEST_CASE("expected path length matches the enumeration oracle within 2%") {
    const std::vector<double> pts{0.0, 1.0, 3.0, 7.0};
    std::vector<std::vector<double>> rows;
    for (double p : pts) rows.push_back({p});
    FeatureMatrix X = make_matrix(rows);

    IsoForest f = fit(X, 10000, 4, 99);
    CHECK(f.height_limit == 2);
    for (int target = 0; target < 4; ++target) {
        double mean = 0.0;
        for (const IsoTree& t : f.trees) mean += path_length(t, X.values.row(target));
        mean /= static_cast<double>(f.trees.size());
        const double expected = oracle_expected_path(pts, 0, 3, target, 0, f.height_limit);
        CHECK(std::abs(mean - expected) / expected < 0.02);
    }
}

TEST_CASE("class ranking: identical per-class data gives exactly equal means") {
    std::vector<std::vector<double>> rows;
    std::vector<int> ids;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 20; ++i) {
            rows.push_back({static_cast<double>(i), static_cast<double>(i % 5)});
            ids.push_back(c);
        }
    FeatureMatrix X = make_matrix(rows, ids, {"a", "b", "c"});
    IsoForest f = fit(X, 50, 30, 5);
    auto ranking = class_anomaly_ranking(f, X);
    REQUIRE(ranking.size() == 3);
    CHECK(ranking[0].mean_score == ranking[1].mean_score);
    CHECK(ranking[1].mean_score == ranking[2].mean_score);
    CHECK(ranking[0].mean_decision == doctest::Approx(0.5 - ranking[0].mean_score));
}

TEST_CASE("a far-away class ranks most anomalous") {
    std::mt19937_64 eng(9);
    std::normal_distribution<double> g(0, 0.5);
    std::vector<std::vector<double>> rows;
    std::vector<int> ids;
    for (int i = 0; i < 300; ++i) {
        rows.push_back({g(eng), g(eng)});
        ids.push_back(i % 2); // two central classes
    }
    for (int i = 0; i < 12; ++i) {
        rows.push_back({15.0 + g(eng), 15.0 + g(eng)});
        ids.push_back(2);
    }
    FeatureMatrix X = make_matrix(rows, ids, {"a", "b", "far"});
    IsoForest f = fit(X, 100, 256, 3);
    auto ranking = class_anomaly_ranking(f, X);
    CHECK(ranking[0].class_name == "far");
    CHECK(ranking[0].mean_decision < 0.0); // negative = anomalous
    std::ostringstream csv;
    write_ranking_csv(csv, ranking);
    CHECK(csv.str().find("class,mean_score,mean_decision") == 0);
}

TEST_CASE("forest serialization round-trips scores") {
    std::mt19937_64 eng(31);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 100; ++i) rows.push_back({u(eng), u(eng)});
    FeatureMatrix X = make_matrix(rows);
    IsoForest f = fit(X, 20, 64, 13);
    f.save("isoforest_rt.json");
    IsoForest g = IsoForest::load("isoforest_rt.json");
    for (std::size_t i = 0; i < X.n_rows(); ++i) CHECK(score(f, X.values.row(i)) == score(g, X.values.row(i)));
}

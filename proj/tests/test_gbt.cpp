#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "nids/gbt.hpp"
#include "nids/kernels.hpp"

using namespace nids;
using namespace nids::gbt;
using nids::preprocess::FeatureMatrix;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& rows, const std::vector<int>& ids, int n_classes) {
    FeatureMatrix m;
    m.values = Matrix(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m.values(i, j) = rows[i][j];
    m.class_ids = ids;
    for (int c = 0; c < n_classes; ++c) m.class_names.push_back("c" + std::to_string(c));
    for (std::size_t j = 0; j < m.values.cols; ++j) m.feature_names.push_back("f" + std::to_string(j));
    return m;
}

// the two-point separable toy: (x=0 -> A, x=1 -> B) x 50 copies
FeatureMatrix separable_toy() {
    std::vector<std::vector<double>> rows;
    std::vector<int> ids;
    for (int i = 0; i < 50; ++i) {
        rows.push_back({0.0});
        ids.push_back(0);
        rows.push_back({1.0});
        ids.push_back(1);
    }
    return make_matrix(rows, ids, 2);
}

// three overlapping 2-D Gaussian blobs
FeatureMatrix blob_matrix(int n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    std::vector<int> ids;
    const double centers[3][2] = {{0, 0}, {2.2, 0.3}, {1.0, 2.0}};
    for (int i = 0; i < n; ++i) {
        int c = i % 3;
        rows.push_back({centers[c][0] + g(eng), centers[c][1] + g(eng)});
        ids.push_back(c);
    }
    return make_matrix(rows, ids, 3);
}

double sum_loss(const Matrix& margins, const std::vector<int>& labels) {
    Matrix probs;
    kernels::softmax_rows(margins, probs);
    double loss = 0.0;
    for (std::size_t i = 0; i < margins.rows; ++i) loss -= std::log(probs(i, labels[i]));
    return loss;
}

struct OracleSplit {
    bool found = false;
    double threshold = 0.0;
    double gain = 0.0;
};

// exhaustive enumeration of every distinct-value midpoint on a 1-feature set
OracleSplit best_split_oracle(const std::vector<double>& x, const std::vector<double>& g,
                              const std::vector<double>& h, const GbtConfig& cfg) {
    std::vector<int> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] != x[b] ? x[a] < x[b] : a < b; });
    double G = 0.0, H = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        G += g[i];
        H += h[i];
    }
    auto obj = [&](double gg, double hh) { return gg * gg / (hh + cfg.lambda); };
    OracleSplit best;
    double gl = 0.0, hl = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        gl += g[order[k]];
        hl += h[order[k]];
        const double a = x[order[k]], b = x[order[k + 1]];
        if (!(b > a)) continue;
        const double thr = (a + b) * 0.5;
        if (!(a < thr && thr <= b)) continue;
        const double gr = G - gl, hr = H - hl;
        if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
        const double gain = 0.5 * (obj(gl, hl) + obj(gr, hr) - obj(G, H)) - cfg.gamma;
        if (gain > 0.0 && gain > best.gain) {
            best.found = true;
            best.gain = gain;
            best.threshold = thr;
        }
    }
    return best;
}

} // namespace

TEST_CASE("separable toy reaches training accuracy 1.0 within 10 rounds") {
    FeatureMatrix X = separable_toy();
    GbtConfig cfg;
    cfg.n_rounds = 10;
    cfg.max_depth = 1;
    cfg.seed = 1;
    BoostedEnsemble model = train(X, cfg);
    std::vector<int> pred = predict(model, X);
    CHECK(pred == X.class_ids);

    Matrix probs = predict_proba(model, X);
    for (std::size_t i = 0; i < X.n_rows(); ++i) CHECK(probs(i, X.class_ids[i]) > 0.9);
}

TEST_CASE("single-class input is rejected") {
    FeatureMatrix X = make_matrix({{0.0}, {1.0}}, {0, 0}, 1);
    GbtConfig cfg;
    CHECK_THROWS_AS(train(X, cfg), Error);
    FeatureMatrix empty = make_matrix({}, {}, 2);
    CHECK_THROWS_AS(train(empty, cfg), Error);
}

TEST_CASE("first split matches the exhaustive enumeration oracle") {
    std::mt19937_64 eng(77);
    std::uniform_int_distribution<int> size_dist(2, 8);
    std::uniform_int_distribution<int> grid(0, 4);
    std::uniform_int_distribution<int> label(0, 1);
    std::uniform_real_distribution<double> real_val(-2.0, 2.0);

    int checked_splits = 0, checked_leaves = 0;
    for (int rep = 0; rep < 400; ++rep) {
        const int n = size_dist(eng);
        std::vector<std::vector<double>> rows;
        std::vector<int> ids;
        bool both = false;
        for (int i = 0; i < n; ++i) {
            // half the suites use a small grid so duplicate values occur
            double v = rep % 2 == 0 ? static_cast<double>(grid(eng)) : real_val(eng);
            rows.push_back({v});
            ids.push_back(label(eng));
        }
        for (int i = 1; i < n; ++i) both = both || ids[i] != ids[0];
        if (!both) continue;

        FeatureMatrix X = make_matrix(rows, ids, 2);
        GbtConfig cfg;
        cfg.n_rounds = 1;
        cfg.max_depth = 1;
        cfg.min_child_weight = 0.0;
        BoostedEnsemble model = train(X, cfg);

        // round 0, class 0: gradients from the uniform softmax
        std::vector<double> g(n), h(n);
        for (int i = 0; i < n; ++i) {
            g[i] = 0.5 - (ids[i] == 0 ? 1.0 : 0.0);
            h[i] = 0.25;
        }
        std::vector<double> x;
        for (const auto& r : rows) x.push_back(r[0]);
        OracleSplit oracle = best_split_oracle(x, g, h, cfg);

        const Tree& tree = model.trees[0];
        if (oracle.found) {
            REQUIRE_FALSE(tree.nodes[0].is_leaf());
            CHECK(tree.nodes[0].feature == 0);
            CHECK(tree.nodes[0].threshold == oracle.threshold); // exact match
            CHECK(tree.nodes[0].gain == doctest::Approx(oracle.gain).epsilon(1e-12));
            ++checked_splits;
        } else {
            CHECK(tree.nodes[0].is_leaf());
            ++checked_leaves;
        }
    }
    CHECK(checked_splits > 100);
    CHECK(checked_leaves > 0);
}

TEST_CASE("softmax gradient and hessian match central finite differences") {
    const int n = 8, k = 3;
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Matrix margins(n, k);
    for (double& v : margins.data) v = u(eng);
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> lab(0, k - 1);
    for (int& y : labels) y = lab(eng);

    Matrix probs;
    kernels::softmax_rows(margins, probs);
    std::uniform_int_distribution<int> row(0, n - 1);
    for (int c = 0; c < k; ++c) {
        std::vector<double> g, h;
        softmax_grad_hess(probs, labels, c, g, h);
        for (int rep = 0; rep < 5; ++rep) {
            const int i = row(eng);
            const double step = 1e-5;
            Matrix mp = margins, mm = margins;
            mp(i, c) += step;
            mm(i, c) -= step;
            const double fd_g = (sum_loss(mp, labels) - sum_loss(mm, labels)) / (2 * step);
            CHECK(std::abs(fd_g - g[i]) / std::max({std::abs(fd_g), std::abs(g[i]), 1e-3}) < 1e-5);

            const double step2 = 1e-4;
            Matrix hp = margins, hm = margins;
            hp(i, c) += step2;
            hm(i, c) -= step2;
            const double fd_h =
                (sum_loss(hp, labels) - 2 * sum_loss(margins, labels) + sum_loss(hm, labels)) / (step2 * step2);
            CHECK(std::abs(fd_h - h[i]) / std::max({std::abs(fd_h), std::abs(h[i]), 1e-3}) < 1e-5);
        }
    }
}

TEST_CASE("training loss is non-increasing with subsample 1") {
    FeatureMatrix X = blob_matrix(400, 3);
    GbtConfig cfg;
    cfg.n_rounds = 40;
    cfg.max_depth = 4;
    cfg.seed = 2;
    BoostedEnsemble model = train(X, cfg);
    REQUIRE(model.train_loss.size() == 40);
    for (std::size_t r = 1; r < model.train_loss.size(); ++r)
        CHECK(model.train_loss[r] <= model.train_loss[r - 1] + 1e-9);
}

TEST_CASE("stored gain equals the objective-reduction recomputation") {
    FeatureMatrix X = blob_matrix(500, 9);
    GbtConfig cfg;
    cfg.n_rounds = 1;
    cfg.max_depth = 4;
    cfg.gamma = 0.1;
    BoostedEnsemble model = train(X, cfg);
    const int k = 3;

    for (int c = 0; c < k; ++c) {
        const Tree& tree = model.trees[c];
        // round-0 gradients from the uniform softmax
        const std::size_t n = X.n_rows();
        std::vector<double> g(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = 1.0 / k - (X.class_ids[i] == c ? 1.0 : 0.0);
            h[i] = (1.0 / k) * (1.0 - 1.0 / k);
        }
        // route rows, accumulate per-node stats
        std::vector<double> G(tree.nodes.size(), 0.0), H(tree.nodes.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            int node = 0;
            while (true) {
                G[node] += g[i];
                H[node] += h[i];
                const TreeNode& t = tree.nodes[node];
                if (t.is_leaf()) break;
                node = X.values(i, t.feature) < t.threshold ? t.left : t.right;
            }
        }
        auto obj = [&](double gg, double hh) { return -0.5 * gg * gg / (hh + cfg.lambda); };
        int internal = 0;
        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            const TreeNode& t = tree.nodes[id];
            if (t.is_leaf()) continue;
            ++internal;
            const double closed =
                0.5 * (G[t.left] * G[t.left] / (H[t.left] + cfg.lambda) + G[t.right] * G[t.right] / (H[t.right] + cfg.lambda) -
                       G[id] * G[id] / (H[id] + cfg.lambda)) -
                cfg.gamma;
            const double reduction = obj(G[id], H[id]) - (obj(G[t.left], H[t.left]) + obj(G[t.right], H[t.right])) - cfg.gamma;
            CHECK(std::abs(t.gain - closed) < 1e-9);
            CHECK(std::abs(closed - reduction) < 1e-9);
        }
        CHECK(internal > 0);
    }
}

TEST_CASE("identical seed and config give a bitwise-identical serialized ensemble") {
    FeatureMatrix X = blob_matrix(300, 12);
    GbtConfig cfg;
    cfg.n_rounds = 6;
    cfg.max_depth = 3;
    cfg.subsample = 0.8;
    cfg.seed = 42;
    BoostedEnsemble a = train(X, cfg);
    BoostedEnsemble b = train(X, cfg);
    CHECK(a.to_json_string() == b.to_json_string());
}

TEST_CASE("strictly increasing transforms of a feature keep the predictions") {
    FeatureMatrix X = blob_matrix(300, 21);
    GbtConfig cfg;
    cfg.n_rounds = 8;
    cfg.max_depth = 4;
    BoostedEnsemble a = train(X, cfg);
    std::vector<int> pa = predict(a, X);

    FeatureMatrix Y = X;
    for (std::size_t i = 0; i < Y.n_rows(); ++i) Y.values(i, 0) = std::pow(Y.values(i, 0), 3.0); // order-preserving
    BoostedEnsemble b = train(Y, cfg);
    std::vector<int> pb = predict(b, Y);
    CHECK(pa == pb);
}

TEST_CASE("zero-round ensemble predicts uniform probabilities and ties break low") {
    BoostedEnsemble empty;
    empty.n_classes = 4;
    empty.class_names = {"a", "b", "c", "d"};
    empty.feature_names = {"f0"};
    empty.gain_by_feature.assign(1, FeatureGain{});
    FeatureMatrix X = make_matrix({{0.3}, {0.9}}, {0, 1}, 4);
    X.class_names = {"a", "b", "c", "d"};
    Matrix probs = predict_proba(empty, X);
    for (std::size_t i = 0; i < 2; ++i)
        for (int c = 0; c < 4; ++c) CHECK(probs(i, c) == doctest::Approx(0.25));
    std::vector<int> pred = predict(empty, X);
    CHECK(pred == std::vector<int>{0, 0});
}

TEST_CASE("probabilities sum to 1 on random rows") {
    FeatureMatrix X = blob_matrix(1000, 31);
    GbtConfig cfg;
    cfg.n_rounds = 5;
    BoostedEnsemble model = train(X, cfg);
    Matrix probs = predict_proba(model, X);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) sum += probs(i, c);
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("prediction validates the feature layout") {
    FeatureMatrix X = separable_toy();
    GbtConfig cfg;
    cfg.n_rounds = 2;
    BoostedEnsemble model = train(X, cfg);
    FeatureMatrix other = X;
    other.feature_names = {"different"};
    CHECK_THROWS_AS(predict_proba(model, other), Error);
}

TEST_CASE("feature importance ranks by mean gain and omits unsplit features") {
    // feature 0 fully separates classes; feature 1 is noise
    std::mt19937_64 eng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    std::vector<int> ids;
    for (int i = 0; i < 200; ++i) {
        int c = i % 2;
        rows.push_back({static_cast<double>(c), u(eng)});
        ids.push_back(c);
    }
    FeatureMatrix X = make_matrix(rows, ids, 2);
    GbtConfig cfg;
    cfg.n_rounds = 3;
    cfg.max_depth = 2;
    BoostedEnsemble model = train(X, cfg);
    auto imp = feature_importance(model);
    REQUIRE(!imp.empty());
    CHECK(imp[0].feature == "f0");
    for (std::size_t i = 1; i < imp.size(); ++i) CHECK(imp[i - 1].mean_gain >= imp[i].mean_gain);
    // totals in the table match the per-node records
    double total = 0.0;
    for (const Tree& t : model.trees)
        for (const TreeNode& n : t.nodes)
            if (!n.is_leaf()) total += n.gain;
    double table_total = 0.0;
    for (const auto& e : imp) table_total += e.total_gain;
    CHECK(table_total == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("single-split ensemble reports that split's gain as the mean") {
    FeatureMatrix X = separable_toy();
    GbtConfig cfg;
    cfg.n_rounds = 1;
    cfg.max_depth = 1;
    BoostedEnsemble model = train(X, cfg);
    auto imp = feature_importance(model);
    REQUIRE(imp.size() == 1);
    CHECK(imp[0].splits == 2); // one split per class tree
    CHECK(imp[0].mean_gain == doctest::Approx(imp[0].total_gain / 2.0));
}

TEST_CASE("ensemble serialization round-trips") {
    FeatureMatrix X = blob_matrix(200, 77);
    GbtConfig cfg;
    cfg.n_rounds = 4;
    cfg.max_depth = 3;
    BoostedEnsemble model = train(X, cfg);
    model.save("gbt_test_model.json");
    BoostedEnsemble loaded = BoostedEnsemble::load("gbt_test_model.json");
    CHECK(loaded.to_json_string() == model.to_json_string());
    CHECK(predict(loaded, X) == predict(model, X));
}

TEST_CASE("tune: budget 1 returns the single sampled config") {
    FeatureMatrix X = separable_toy();
    TuneSpace space;
    space.max_depth = IntRange{1, 3};
    TuneResult r = tune(X, X, 1, space, GbtConfig{.n_rounds = 3}, 7);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.best.max_depth == r.trials[0].config.max_depth);
}

TEST_CASE("tune: a point space returns the default config") {
    FeatureMatrix X = separable_toy();
    TuneSpace space;
    space.learning_rate = RealRange{0.3, 0.3, false};
    GbtConfig defaults;
    defaults.n_rounds = 3;
    TuneResult r = tune(X, X, 3, space, defaults, 7);
    CHECK(r.best.learning_rate == doctest::Approx(0.3));
    CHECK(r.best.n_rounds == 3);
    CHECK(r.best.max_depth == defaults.max_depth);
}

TEST_CASE("tune on the separable toy reaches validation accuracy 1.0") {
    FeatureMatrix X = separable_toy();
    TuneSpace space;
    space.max_depth = IntRange{1, 4};
    space.learning_rate = RealRange{0.1, 0.5, false};
    TuneResult r = tune(X, X, 4, space, GbtConfig{.n_rounds = 8}, 13);
    double best = 0.0;
    for (const Trial& t : r.trials) best = std::max(best, t.val_accuracy);
    CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("tune rejects an empty space or non-positive budget") {
    FeatureMatrix X = separable_toy();
    CHECK_THROWS_AS(tune(X, X, 1, TuneSpace{}, GbtConfig{}, 1), Error);
    TuneSpace space;
    space.max_depth = IntRange{1, 2};
    CHECK_THROWS_AS(tune(X, X, 0, space, GbtConfig{}, 1), Error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "nids/gan.hpp"
#include "nids/gbt.hpp"
#include "nids/isoforest.hpp"
#include "nids/kernels.hpp"

// The OpenMP kernels must be bitwise-equal to the serial reference: the
// parallelism is only over independent outputs and every reduction keeps a
// fixed order, so these checks compare exact doubles.

using namespace nids;
using namespace nids::kernels;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Matrix m(r, c);
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double& v : m.data) v = u(eng);
    return m;
}

struct BackendGuard {
    Backend saved = backend();
    ~BackendGuard() { set_backend(saved); }
};

preprocess::FeatureMatrix labeled_matrix(std::size_t rows, std::size_t cols, int classes, std::uint64_t seed) {
    preprocess::FeatureMatrix m;
    m.values = random_matrix(rows, cols, seed);
    m.class_ids.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        m.class_ids[i] = static_cast<int>(i % classes);
        m.values(i, 0) += m.class_ids[i]; // separable-ish
    }
    for (int c = 0; c < classes; ++c) m.class_names.push_back("c" + std::to_string(c));
    for (std::size_t f = 0; f < cols; ++f) m.feature_names.push_back("f" + std::to_string(f));
    return m;
}

} // namespace

TEST_CASE("linear kernels: serial and openmp agree bitwise") {
    Matrix X = random_matrix(37, 19, 1);
    Matrix W = random_matrix(23, 19, 2);
    std::vector<double> b(23, 0.25);

    Matrix Ys, Yo;
    linear_forward_serial(X, W, b, Ys);
    linear_forward_omp(X, W, b, Yo);
    CHECK(Ys.data == Yo.data);

    Matrix dXs, dXo;
    linear_backward_data_serial(Ys, W, dXs);
    linear_backward_data_omp(Ys, W, dXo);
    CHECK(dXs.data == dXo.data);

    Matrix dWs, dWo;
    std::vector<double> dbs, dbo;
    linear_backward_params_serial(Ys, X, dWs, dbs);
    linear_backward_params_omp(Ys, X, dWo, dbo);
    CHECK(dWs.data == dWo.data);
    CHECK(dbs == dbo);
}

TEST_CASE("softmax kernel: serial and openmp agree bitwise") {
    Matrix m = random_matrix(501, 7, 3);
    Matrix ps, po;
    softmax_rows_serial(m, ps);
    softmax_rows_omp(m, po);
    CHECK(ps.data == po.data);
}

TEST_CASE("parallel_for covers every index exactly once under both backends") {
    BackendGuard guard;
    for (Backend b : {Backend::serial, Backend::openmp}) {
        set_backend(b);
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("gbt training is bitwise identical across backends") {
    BackendGuard guard;
    auto X = labeled_matrix(400, 12, 3, 5);
    gbt::GbtConfig cfg;
    cfg.n_rounds = 5;
    cfg.max_depth = 4;
    cfg.subsample = 0.9;
    cfg.seed = 7;

    set_backend(Backend::serial);
    gbt::BoostedEnsemble serial_model = gbt::train(X, cfg);
    std::vector<int> serial_pred = gbt::predict(serial_model, X);

    set_backend(Backend::openmp);
    gbt::BoostedEnsemble omp_model = gbt::train(X, cfg);
    std::vector<int> omp_pred = gbt::predict(omp_model, X);

    CHECK(serial_model.to_json_string() == omp_model.to_json_string());
    CHECK(serial_pred == omp_pred);
}

TEST_CASE("isolation forest is bitwise identical across backends") {
    BackendGuard guard;
    auto X = labeled_matrix(300, 8, 2, 9);

    set_backend(Backend::serial);
    isoforest::IsoForest fs = isoforest::fit(X, 40, 64, 3);
    std::vector<double> ss = isoforest::score_all(fs, X.values);

    set_backend(Backend::openmp);
    isoforest::IsoForest fo = isoforest::fit(X, 40, 64, 3);
    std::vector<double> so = isoforest::score_all(fo, X.values);

    CHECK(ss == so);
    REQUIRE(fs.trees.size() == fo.trees.size());
    for (std::size_t t = 0; t < fs.trees.size(); ++t) {
        REQUIRE(fs.trees[t].nodes.size() == fo.trees[t].nodes.size());
        for (std::size_t n = 0; n < fs.trees[t].nodes.size(); ++n) {
            CHECK(fs.trees[t].nodes[n].feature == fo.trees[t].nodes[n].feature);
            CHECK(fs.trees[t].nodes[n].split == fo.trees[t].nodes[n].split);
            CHECK(fs.trees[t].nodes[n].size == fo.trees[t].nodes[n].size);
        }
    }
}

TEST_CASE("gan training is bitwise identical across backends") {
    BackendGuard guard;
    gan::GanConfig cfg;
    cfg.latent_dim = 4;
    cfg.gen_hidden = {6, 8, 8, 6};
    cfg.disc_hidden = {8, 6, 4};
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 21;

    Matrix rows(48, 5);
    std::mt19937_64 eng(33);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (double& v : rows.data) v = u(eng);

    set_backend(Backend::serial);
    gan::GanTrainResult rs = gan::train_gan(rows, cfg);
    set_backend(Backend::openmp);
    gan::GanTrainResult ro = gan::train_gan(rows, cfg);

    CHECK(rs.trace.g_loss == ro.trace.g_loss);
    CHECK(rs.trace.d_loss == ro.trace.d_loss);
    CHECK(rs.generator.out.W.data == ro.generator.out.W.data);
    for (std::size_t i = 0; i < rs.generator.blocks.size(); ++i) {
        CHECK(rs.generator.blocks[i].W.data == ro.generator.blocks[i].W.data);
        CHECK(rs.generator.bn[i].running_var == ro.generator.bn[i].running_var);
    }
    CHECK(rs.discriminator.out.W.data == ro.discriminator.out.W.data);
}

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nids/encoder.hpp"
#include "nids/gan.hpp"
#include "nids/gbt.hpp"
#include "nids/isoforest.hpp"
#include "nids/kernels.hpp"

// Times each hot kernel under the serial reference backend and the OpenMP one.
// The implementations are bitwise-equivalent; this only reports the speedup.

using namespace nids;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm-up
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const std::string& name, const std::function<void()>& fn, int reps) {
    kernels::set_backend(kernels::Backend::serial);
    const double serial_ms = time_ms(fn, reps);
    kernels::set_backend(kernels::Backend::openmp);
    const double omp_ms = time_ms(fn, reps);
    std::printf("%-28s %10.2f ms %10.2f ms %8.2fx\n", name.c_str(), serial_ms, omp_ms, serial_ms / omp_ms);
}

preprocess::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, int classes, std::uint64_t seed) {
    preprocess::FeatureMatrix m;
    m.values = Matrix(rows, cols);
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : m.values.data) v = u(eng);
    m.class_ids.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) m.class_ids[i] = static_cast<int>(i % classes);
    for (int c = 0; c < classes; ++c) m.class_names.push_back("c" + std::to_string(c));
    for (std::size_t f = 0; f < cols; ++f) m.feature_names.push_back("f" + std::to_string(f));
    // make classes separable enough that trees have work to do
    for (std::size_t i = 0; i < rows; ++i) m.values(i, 0) += m.class_ids[i];
    return m;
}

} // namespace

int main() {
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");
    std::printf("threads available: %d\n", kernels::thread_count());

    {
        Matrix X(512, 256), W(256, 256);
        std::vector<double> b(256, 0.1);
        std::mt19937_64 eng(1);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : X.data) v = u(eng);
        for (double& v : W.data) v = u(eng);
        Matrix Y;
        report("linear_forward 512x256x256", [&] { kernels::linear_forward(X, W, b, Y); }, 20);
        Matrix dX;
        report("linear_backward_data", [&] { kernels::linear_backward_data(Y, W, dX); }, 20);
        Matrix dW;
        std::vector<double> db;
        report("linear_backward_params", [&] { kernels::linear_backward_params(Y, X, dW, db); }, 20);
    }

    {
        Matrix margins(200000, 8);
        std::mt19937_64 eng(2);
        std::uniform_real_distribution<double> u(-4.0, 4.0);
        for (double& v : margins.data) v = u(eng);
        Matrix probs;
        report("softmax_rows 200k x 8", [&] { kernels::softmax_rows(margins, probs); }, 10);
    }

    {
        auto X = random_matrix(20000, 30, 6, 3);
        gbt::GbtConfig cfg;
        cfg.n_rounds = 4;
        cfg.max_depth = 6;
        cfg.seed = 5;
        report("gbt train 20k x 30 (4 rnd)", [&] { gbt::train(X, cfg); }, 3);
        gbt::BoostedEnsemble model = gbt::train(X, cfg);
        report("gbt predict 20k rows", [&] { gbt::predict(model, X); }, 10);
    }

    {
        auto X = random_matrix(20000, 30, 6, 4);
        report("isoforest fit t=100 psi=256", [&] { isoforest::fit(X, 100, 256, 9); }, 3);
        isoforest::IsoForest f = isoforest::fit(X, 100, 256, 9);
        report("isoforest score 20k rows", [&] { isoforest::score_all(f, X.values); }, 5);
    }

    {
        gan::GanConfig cfg;
        cfg.latent_dim = 32;
        cfg.gen_hidden = {64, 128, 128, 64};
        cfg.disc_hidden = {128, 64, 32};
        cfg.epochs = 2;
        cfg.batch_size = 64;
        cfg.seed = 11;
        Matrix rows(1024, 40);
        std::mt19937_64 eng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& v : rows.data) v = u(eng);
        report("gan train 1k x 40 (2 ep)", [&] { gan::train_gan(rows, cfg); }, 2);
    }

    return 0;
}

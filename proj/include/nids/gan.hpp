#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nids/encoder.hpp"
#include "nids/matrix.hpp"

namespace nids::gan {

struct DenseLayer {
    Matrix W;               // out x in
    std::vector<double> b;  // out
};

struct BatchNormState {
    std::vector<double> scale, shift;
    std::vector<double> running_mean, running_var;
    double momentum = 0.9; // running = (1-momentum)*running + momentum*batch
    double epsilon = 1e-5;
};

// four blocks of dense -> LeakyReLU(0.2) -> batch norm, then dense + sigmoid
struct GeneratorNet {
    std::vector<DenseLayer> blocks;
    std::vector<BatchNormState> bn;
    DenseLayer out;
    int latent_dim = 0;

    int feature_width() const { return static_cast<int>(out.W.rows); }
};

// three blocks of dense -> LeakyReLU(0.2), then dense + sigmoid scalar
struct DiscriminatorNet {
    std::vector<DenseLayer> blocks;
    DenseLayer out;
};

struct GanConfig {
    int latent_dim = 64;
    std::vector<int> gen_hidden{128, 256, 256, 128};
    std::vector<int> disc_hidden{256, 128, 64};
    int epochs = 5000;
    int batch_size = 64;
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> g_loss; // per-epoch means
    std::vector<double> d_loss;
};

inline constexpr double kLeakySlope = 0.2;

std::vector<double> leaky_relu(std::span<const double> v, double slope);

// train mode normalizes by batch mean/variance (rows >= 2) and folds them into
// the running statistics; eval mode normalizes by the running statistics.
Matrix batch_norm_forward(const Matrix& batch, BatchNormState& state, bool training);

// -(1/n) sum[y log p + (1-y) log(1-p)], predictions clamped to [1e-7, 1-1e-7]
double bce_loss(std::span<const double> predictions, std::span<const double> targets);

Matrix generator_forward(const GeneratorNet& g, const Matrix& z);        // eval mode
Matrix generator_forward_train(GeneratorNet& g, const Matrix& z);        // updates running stats
std::vector<double> discriminator_forward(const DiscriminatorNet& d, const Matrix& X);

GeneratorNet init_generator(const GanConfig& cfg, int feature_width);
DiscriminatorNet init_discriminator(const GanConfig& cfg, int feature_width);

// per-tensor gradients, layer order: blocks then out
struct DiscGrads {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;
};

struct GenGrads {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;
    std::vector<std::vector<double>> dscale;
    std::vector<std::vector<double>> dshift;
};

// BCE of D(X) against targets; exact gradients for every D parameter
double disc_loss_grads(const DiscriminatorNet& d, const Matrix& X, std::span<const double> targets,
                       DiscGrads* grads);

// non-saturating generator loss: BCE of D(G(z)) against 1, backpropagated
// through the discriminator and the full generator (batch norm included)
double gen_loss_grads(GeneratorNet& g, const DiscriminatorNet& d, const Matrix& z, GenGrads* grads,
                      bool update_running);

struct GanTrainResult {
    GeneratorNet generator;
    DiscriminatorNet discriminator;
    TrainTrace trace;
};

// Alternating Adam steps: discriminator on real(1)/generated(0) batches, then
// generator on D(G(z)) vs 1. class_rows values must lie in [0,1].
GanTrainResult train_gan(const Matrix& class_rows, const GanConfig& cfg);

// Snap rules applied to generator output so rows decode cleanly: onehot blocks
// re-binarized by arg-max over the active columns, ordinal columns rounded to
// their level grid. Everything stays inside [0,1].
struct Postprocess {
    struct OneHotBlock {
        int start = 0;
        int width = 0;
        std::vector<int> active; // offsets inside the block; empty = leave block as-is
    };
    struct OrdinalCol {
        int col = 0;
        int levels = 1; // grid points i/(levels-1)
    };
    std::vector<OneHotBlock> onehot;
    std::vector<OrdinalCol> ordinal;
};

Matrix synthesize(const GeneratorNet& g, int n, std::uint64_t seed, const Postprocess& post);

struct PerClassAugment {
    std::string class_name;
    int class_id = 0;
    int added = 0;
    GeneratorNet generator;
    DiscriminatorNet discriminator;
    TrainTrace trace;
    Matrix synthetic; // appended rows, encoder space
};

struct AugmentResult {
    preprocess::FeatureMatrix augmented; // original rows first, synthetic appended
    std::vector<PerClassAugment> per_class;
};

// For every class below its target count: train a GAN on that class's rows
// ([0,1]-scaled per class), synthesize the deficit, decode and append.
AugmentResult augment(const preprocess::FeatureMatrix& train, const std::map<std::string, int>& targets,
                      const GanConfig& cfg, const preprocess::FittedEncoder& enc);

void write_trace_csv(std::ostream& out, const TrainTrace& trace);

void save_gan(const std::string& path, const GeneratorNet& g, const DiscriminatorNet& d);
std::pair<GeneratorNet, DiscriminatorNet> load_gan(const std::string& path);

} // namespace nids::gan

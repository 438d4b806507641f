#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nids/encoder.hpp"
#include "nids/matrix.hpp"

namespace nids::gbt {

struct GbtConfig {
    int n_rounds = 160;
    double learning_rate = 0.3;
    int max_depth = 6;
    double min_child_weight = 1.0; // minimum hessian sum per child
    double lambda = 1.0;           // L2 leaf penalty
    double gamma = 0.0;            // per-split penalty
    double subsample = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// internal node: feature >= 0, x < threshold goes left; leaf: feature == -1
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0; // leaf value, learning rate already applied
    double gain = 0.0;   // split gain for internal nodes

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    int klass = 0;
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

struct FeatureGain {
    double total = 0.0;
    long long splits = 0;
};

struct BoostedEnsemble {
    GbtConfig config;
    int n_classes = 0;
    double base_score = 0.0;
    std::vector<Tree> trees; // round-major, class-minor: n_rounds * n_classes
    std::vector<FeatureGain> gain_by_feature;
    std::vector<double> train_loss; // mean softmax cross-entropy after each round
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;

    void save(const std::string& path) const;
    static BoostedEnsemble load(const std::string& path);
    std::string to_json_string() const;
};

// gradient/hessian of the softmax cross-entropy w.r.t. the class-c margins:
// g = p - 1{y=c}, h = p(1-p)
void softmax_grad_hess(const Matrix& probs, const std::vector<int>& labels, int klass, std::vector<double>& grad,
                       std::vector<double>& hess);

// Newton boosting on the softmax cross-entropy; trees grown greedily on the
// exact split gain 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma with
// leaf weight -G/(H+l) scaled by the learning rate.
BoostedEnsemble train(const preprocess::FeatureMatrix& X, const GbtConfig& cfg);

double predict_tree(const Tree& tree, std::span<const double> row);
Matrix predict_margins(const BoostedEnsemble& m, const Matrix& X);
Matrix predict_proba(const BoostedEnsemble& m, const preprocess::FeatureMatrix& X);
std::vector<int> predict(const BoostedEnsemble& m, const preprocess::FeatureMatrix& X);

struct ImportanceEntry {
    std::string feature;
    double mean_gain = 0.0;
    double total_gain = 0.0;
    long long splits = 0;
};

// descending mean gain; features never split are omitted
std::vector<ImportanceEntry> feature_importance(const BoostedEnsemble& m);

// ---------------------------------------------------------------------------
// random-search tuning
// ---------------------------------------------------------------------------

struct RealRange {
    double lo = 0.0, hi = 0.0;
    bool log_scale = false;
};

struct IntRange {
    int lo = 0, hi = 0;
};

struct TuneSpace {
    std::optional<IntRange> n_rounds;
    std::optional<IntRange> max_depth;
    std::optional<RealRange> learning_rate;
    std::optional<RealRange> min_child_weight;
    std::optional<RealRange> lambda;
    std::optional<RealRange> gamma;
    std::optional<RealRange> subsample;

    bool empty() const;
};

struct Trial {
    int id = 0;
    GbtConfig config;
    double val_accuracy = 0.0;
};

struct TuneResult {
    GbtConfig best;
    std::vector<Trial> trials;
};

TuneResult tune(const preprocess::FeatureMatrix& train_m, const preprocess::FeatureMatrix& val_m, int budget,
                const TuneSpace& space, const GbtConfig& defaults, std::uint64_t seed);

void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials);

} // namespace nids::gbt

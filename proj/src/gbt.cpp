#include "nids/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "nids/kernels.hpp"

namespace nids::gbt {

using json = nlohmann::ordered_json;

void GbtConfig::validate() const {
    if (n_rounds < 1) throw Error("gbt config: n_rounds must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error("gbt config: learning_rate must be in (0,1]");
    if (max_depth < 1) throw Error("gbt config: max_depth must be >= 1");
    if (min_child_weight < 0.0) throw Error("gbt config: min_child_weight must be >= 0");
    if (lambda < 0.0) throw Error("gbt config: lambda must be >= 0");
    if (gamma < 0.0) throw Error("gbt config: gamma must be >= 0");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw Error("gbt config: subsample must be in (0,1]");
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

struct SplitCand {
    double gain = 0.0; // only strictly positive candidates are recorded
    int feature = -1;
    double threshold = 0.0;
    double grad_left = 0.0;
    double hess_left = 0.0;
};

struct NodeStats {
    int node = -1;
    double grad = 0.0;
    double hess = 0.0;
};

struct FeatureScan {
    double grad = 0.0;
    double hess = 0.0;
    long long count = 0;
    double prev = 0.0;
};

inline double leaf_objective_gain(double g, double h, double lambda) {
    return (g * g) / (h + lambda);
}

struct TreeBuilder {
    const Matrix& X;                            // n x d, row-major
    const std::vector<std::vector<int>>& sorted_idx; // per feature, rows ordered by value
    const std::vector<std::vector<double>>& columns; // per feature, column values
    const GbtConfig& cfg;
    const std::vector<double>& grad;
    const std::vector<double>& hess;

    std::vector<int> pos;   // row -> node id (-1 = not in this tree)
    Tree tree;
    std::vector<FeatureGain>* gain_table = nullptr;

    TreeBuilder(const Matrix& x, const std::vector<std::vector<int>>& si, const std::vector<std::vector<double>>& cols,
                const GbtConfig& c, const std::vector<double>& g, const std::vector<double>& h)
        : X(x), sorted_idx(si), columns(cols), cfg(c), grad(g), hess(h) {}

    void build(const std::vector<char>& in_sample, int klass) {
        const std::size_t n = X.rows;
        const std::size_t d = X.cols;
        tree.klass = klass;
        tree.nodes.clear();

        pos.assign(n, -1);
        double root_g = 0.0, root_h = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_sample[i]) continue;
            pos[i] = 0;
            root_g += grad[i];
            root_h += hess[i];
        }
        tree.nodes.push_back(TreeNode{});
        std::vector<NodeStats> frontier{{0, root_g, root_h}};

        for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
            std::vector<int> node_slot(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < frontier.size(); ++s) node_slot[frontier[s].node] = static_cast<int>(s);

            // per-feature candidates, computed independently then reduced in
            // fixed feature order (ties: lowest feature, lowest threshold)
            std::vector<SplitCand> cand(d * frontier.size());
            kernels::parallel_for(d, [&](std::size_t f) {
                scan_one_feature(static_cast<int>(f), frontier, node_slot,
                                 std::span<SplitCand>(cand.data() + f * frontier.size(), frontier.size()));
            });

            std::vector<SplitCand> best(frontier.size());
            for (std::size_t f = 0; f < d; ++f) {
                for (std::size_t s = 0; s < frontier.size(); ++s) {
                    const SplitCand& c = cand[f * frontier.size() + s];
                    if (c.feature >= 0 && c.gain > best[s].gain) best[s] = c;
                }
            }

            std::vector<NodeStats> next;
            std::vector<int> split_map(tree.nodes.size(), -1); // node id -> slot if it split
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                const SplitCand& b = best[s];
                const NodeStats& ns = frontier[s];
                if (b.feature < 0) {
                    make_leaf(ns);
                    continue;
                }
                TreeNode& node = tree.nodes[ns.node];
                node.feature = b.feature;
                node.threshold = b.threshold;
                node.gain = b.gain;
                node.left = static_cast<int>(tree.nodes.size());
                node.right = node.left + 1;
                tree.nodes.push_back(TreeNode{});
                tree.nodes.push_back(TreeNode{});
                if (gain_table) {
                    (*gain_table)[b.feature].total += b.gain;
                    (*gain_table)[b.feature].splits += 1;
                }
                next.push_back({node.left, b.grad_left, b.hess_left});
                next.push_back({node.right, ns.grad - b.grad_left, ns.hess - b.hess_left});
                split_map[ns.node] = static_cast<int>(s);
            }

            // route rows of split nodes to their children
            kernels::parallel_for(X.rows, [&](std::size_t i) {
                const int p = pos[i];
                if (p < 0 || static_cast<std::size_t>(p) >= split_map.size() || split_map[p] < 0) return;
                const TreeNode& node = tree.nodes[p];
                pos[i] = X(i, node.feature) < node.threshold ? node.left : node.right;
            });
            frontier = std::move(next);
        }
        for (const NodeStats& ns : frontier) make_leaf(ns);
    }

private:
    void make_leaf(const NodeStats& ns) {
        TreeNode& node = tree.nodes[ns.node];
        node.feature = -1;
        const double denom = ns.hess + cfg.lambda;
        node.weight = denom > 0.0 ? -cfg.learning_rate * ns.grad / denom : 0.0;
    }

    void scan_one_feature(int f, const std::vector<NodeStats>& frontier, const std::vector<int>& node_slot,
                          std::span<SplitCand> out) {
        thread_local std::vector<FeatureScan> scratch;
        scratch.assign(frontier.size(), FeatureScan{});
        for (auto& c : out) c = SplitCand{};
        const std::vector<double>& column = columns[f];
        for (int idx : sorted_idx[f]) {
            const int p = pos[idx];
            if (p < 0) continue;
            const int slot = node_slot[p];
            if (slot < 0) continue;
            FeatureScan& acc = scratch[slot];
            const double v = column[idx];
            if (acc.count > 0 && v > acc.prev) {
                const NodeStats& ns = frontier[slot];
                const double gl = acc.grad, hl = acc.hess;
                const double gr = ns.grad - gl, hr = ns.hess - hl;
                if (hl >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                    const double thr = (acc.prev + v) * 0.5;
                    if (acc.prev < thr && thr <= v) {
                        const double gain = 0.5 * (leaf_objective_gain(gl, hl, cfg.lambda) +
                                                   leaf_objective_gain(gr, hr, cfg.lambda) -
                                                   leaf_objective_gain(ns.grad, ns.hess, cfg.lambda)) -
                                            cfg.gamma;
                        if (gain > 0.0 && gain > out[slot].gain) out[slot] = SplitCand{gain, f, thr, gl, hl};
                    }
                }
            }
            acc.grad += grad[idx];
            acc.hess += hess[idx];
            acc.count += 1;
            acc.prev = v;
        }
    }
};

double softmax_cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double p = std::max(probs(i, labels[i]), 1e-15);
        loss -= std::log(p);
    }
    return loss / static_cast<double>(probs.rows);
}

} // namespace

void softmax_grad_hess(const Matrix& probs, const std::vector<int>& labels, int klass, std::vector<double>& grad,
                       std::vector<double>& hess) {
    const std::size_t n = probs.rows;
    grad.resize(n);
    hess.resize(n);
    kernels::parallel_for(n, [&](std::size_t i) {
        const double p = probs(i, klass);
        grad[i] = p - (labels[i] == klass ? 1.0 : 0.0);
        hess[i] = p * (1.0 - p);
    });
}

BoostedEnsemble train(const preprocess::FeatureMatrix& Xm, const GbtConfig& cfg) {
    cfg.validate();
    const Matrix& X = Xm.values;
    const std::size_t n = X.rows;
    const std::size_t d = X.cols;
    if (n == 0) throw Error("gbt train: empty training set");
    const int k = static_cast<int>(Xm.class_names.size());
    {
        std::vector<char> present(k, 0);
        int distinct = 0;
        for (int y : Xm.class_ids)
            if (!present[y]) {
                present[y] = 1;
                ++distinct;
            }
        if (distinct < 2) throw Error("gbt train: need at least 2 classes in the training rows");
    }

    // column views + per-feature sort orders, once per training run
    std::vector<std::vector<double>> columns(d, std::vector<double>(n));
    std::vector<std::vector<int>> sorted_idx(d);
    kernels::parallel_for(d, [&](std::size_t f) {
        std::vector<double>& col = columns[f];
        for (std::size_t i = 0; i < n; ++i) col[i] = X(i, f);
        std::vector<int>& idx = sorted_idx[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
    });

    BoostedEnsemble ens;
    ens.config = cfg;
    ens.n_classes = k;
    ens.base_score = 0.0;
    ens.feature_names = Xm.feature_names;
    ens.class_names = Xm.class_names;
    ens.gain_by_feature.assign(d, FeatureGain{});
    ens.trees.reserve(static_cast<std::size_t>(cfg.n_rounds) * k);

    Matrix margins(n, k, ens.base_score);
    Matrix probs;
    std::vector<double> grad(n), hess(n);
    std::vector<char> in_sample(n, 1);

    for (int round = 0; round < cfg.n_rounds; ++round) {
        kernels::softmax_rows(margins, probs);
        for (int c = 0; c < k; ++c) {
            softmax_grad_hess(probs, Xm.class_ids, c, grad, hess);
            if (cfg.subsample < 1.0) {
                std::mt19937_64 engine(mix_seed(cfg.seed, static_cast<std::uint64_t>(round) * k + c));
                std::uniform_real_distribution<double> u(0.0, 1.0);
                bool any = false;
                for (std::size_t i = 0; i < n; ++i) {
                    in_sample[i] = u(engine) < cfg.subsample ? 1 : 0;
                    any = any || in_sample[i];
                }
                if (!any) std::fill(in_sample.begin(), in_sample.end(), 1);
            }

            TreeBuilder builder(X, sorted_idx, columns, cfg, grad, hess);
            builder.gain_table = &ens.gain_by_feature;
            builder.build(in_sample, c);
            const Tree& tree = ens.trees.emplace_back(std::move(builder.tree));

            kernels::parallel_for(n, [&](std::size_t i) { margins(i, c) += predict_tree(tree, X.row(i)); });
        }
        kernels::softmax_rows(margins, probs);
        ens.train_loss.push_back(softmax_cross_entropy(probs, Xm.class_ids));
    }
    return ens;
}

// ---------------------------------------------------------------------------
// prediction
// ---------------------------------------------------------------------------

double predict_tree(const Tree& tree, std::span<const double> row) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) node = &tree.nodes[row[node->feature] < node->threshold ? node->left : node->right];
    return node->weight;
}

Matrix predict_margins(const BoostedEnsemble& m, const Matrix& X) {
    Matrix margins(X.rows, m.n_classes, m.base_score);
    kernels::parallel_for(X.rows, [&](std::size_t i) {
        auto row = X.row(i);
        double* out = margins.data.data() + i * m.n_classes;
        for (const Tree& t : m.trees) out[t.klass] += predict_tree(t, row);
    });
    return margins;
}

Matrix predict_proba(const BoostedEnsemble& m, const preprocess::FeatureMatrix& X) {
    if (X.feature_names != m.feature_names)
        throw Error("gbt predict: feature layout does not match the trained ensemble");
    Matrix margins = predict_margins(m, X.values);
    Matrix probs;
    kernels::softmax_rows(margins, probs);
    return probs;
}

std::vector<int> predict(const BoostedEnsemble& m, const preprocess::FeatureMatrix& X) {
    Matrix probs = predict_proba(m, X);
    std::vector<int> out(probs.rows);
    kernels::parallel_for(probs.rows, [&](std::size_t i) {
        const double* p = probs.data.data() + i * probs.cols;
        int best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c)
            if (p[c] > p[best]) best = static_cast<int>(c); // ties keep the lowest id
        out[i] = best;
    });
    return out;
}

std::vector<ImportanceEntry> feature_importance(const BoostedEnsemble& m) {
    std::vector<ImportanceEntry> out;
    for (std::size_t f = 0; f < m.gain_by_feature.size(); ++f) {
        const FeatureGain& g = m.gain_by_feature[f];
        if (g.splits == 0) continue;
        out.push_back({m.feature_names[f], g.total / static_cast<double>(g.splits), g.total, g.splits});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) { return a.mean_gain > b.mean_gain; });
    return out;
}

// ---------------------------------------------------------------------------
// tuning
// ---------------------------------------------------------------------------

bool TuneSpace::empty() const {
    return !n_rounds && !max_depth && !learning_rate && !min_child_weight && !lambda && !gamma && !subsample;
}

namespace {

double sample_real(std::mt19937_64& eng, const RealRange& r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double t = u(eng);
    if (r.log_scale) return std::exp(std::log(r.lo) + t * (std::log(r.hi) - std::log(r.lo)));
    return r.lo + t * (r.hi - r.lo);
}

int sample_int(std::mt19937_64& eng, const IntRange& r) {
    std::uniform_int_distribution<int> u(r.lo, r.hi);
    return u(eng);
}

} // namespace

TuneResult tune(const preprocess::FeatureMatrix& train_m, const preprocess::FeatureMatrix& val_m, int budget,
                const TuneSpace& space, const GbtConfig& defaults, std::uint64_t seed) {
    if (budget < 1) throw Error("tune: budget must be >= 1");
    if (space.empty()) throw Error("tune: empty search space");

    std::mt19937_64 eng(seed);
    TuneResult res;
    double best_acc = -1.0;
    for (int t = 0; t < budget; ++t) {
        GbtConfig cfg = defaults;
        cfg.seed = defaults.seed;
        if (space.n_rounds) cfg.n_rounds = sample_int(eng, *space.n_rounds);
        if (space.max_depth) cfg.max_depth = sample_int(eng, *space.max_depth);
        if (space.learning_rate) cfg.learning_rate = sample_real(eng, *space.learning_rate);
        if (space.min_child_weight) cfg.min_child_weight = sample_real(eng, *space.min_child_weight);
        if (space.lambda) cfg.lambda = sample_real(eng, *space.lambda);
        if (space.gamma) cfg.gamma = sample_real(eng, *space.gamma);
        if (space.subsample) cfg.subsample = sample_real(eng, *space.subsample);

        BoostedEnsemble model = train(train_m, cfg);
        std::vector<int> pred = predict(model, val_m);
        long long correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val_m.class_ids[i];
        const double acc = val_m.n_rows() ? static_cast<double>(correct) / val_m.n_rows() : 0.0;
        res.trials.push_back({t, cfg, acc});
        if (acc > best_acc) { // ties keep the earliest trial
            best_acc = acc;
            res.best = cfg;
        }
    }
    return res;
}

void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials) {
    out << "trial,n_rounds,learning_rate,max_depth,min_child_weight,lambda,gamma,subsample,val_accuracy\n";
    for (const Trial& t : trials) {
        out << t.id << ',' << t.config.n_rounds << ',' << format_double(t.config.learning_rate) << ','
            << t.config.max_depth << ',' << format_double(t.config.min_child_weight) << ','
            << format_double(t.config.lambda) << ',' << format_double(t.config.gamma) << ','
            << format_double(t.config.subsample) << ',' << format_double(t.val_accuracy) << '\n';
    }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

json node_to_json(const Tree& t, int id) {
    const TreeNode& n = t.nodes[id];
    json j;
    if (n.is_leaf()) {
        j["leaf"] = n.weight;
        return j;
    }
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["gain"] = n.gain;
    j["left"] = node_to_json(t, n.left);
    j["right"] = node_to_json(t, n.right);
    return j;
}

int node_from_json(const json& j, Tree& t) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.push_back(TreeNode{});
    if (j.contains("leaf")) {
        t.nodes[id].weight = j.at("leaf").get<double>();
        return id;
    }
    t.nodes[id].feature = j.at("feature").get<int>();
    t.nodes[id].threshold = j.at("threshold").get<double>();
    t.nodes[id].gain = j.at("gain").get<double>();
    const int left = node_from_json(j.at("left"), t);
    const int right = node_from_json(j.at("right"), t);
    t.nodes[id].left = left;
    t.nodes[id].right = right;
    return id;
}

json config_to_json(const GbtConfig& c) {
    json j;
    j["n_rounds"] = c.n_rounds;
    j["learning_rate"] = c.learning_rate;
    j["max_depth"] = c.max_depth;
    j["min_child_weight"] = c.min_child_weight;
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    j["subsample"] = c.subsample;
    j["seed"] = c.seed;
    return j;
}

GbtConfig config_from_json(const json& j) {
    GbtConfig c;
    c.n_rounds = j.at("n_rounds").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_depth = j.at("max_depth").get<int>();
    c.min_child_weight = j.at("min_child_weight").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.subsample = j.at("subsample").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

std::string BoostedEnsemble::to_json_string() const {
    json j;
    j["format"] = "nids.gbt.v1";
    j["config"] = config_to_json(config);
    j["n_classes"] = n_classes;
    j["base_score"] = base_score;
    j["feature_names"] = feature_names;
    j["class_names"] = class_names;
    json gains = json::array();
    for (std::size_t f = 0; f < gain_by_feature.size(); ++f) {
        if (gain_by_feature[f].splits == 0) continue;
        json e;
        e["feature"] = feature_names[f];
        e["total_gain"] = gain_by_feature[f].total;
        e["splits"] = gain_by_feature[f].splits;
        gains.push_back(std::move(e));
    }
    j["gain_by_feature"] = std::move(gains);
    json trees_json = json::array();
    for (const Tree& t : trees) {
        json tj;
        tj["class"] = t.klass;
        tj["root"] = node_to_json(t, 0);
        trees_json.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees_json);
    j["train_loss"] = train_loss;
    return j.dump(2) + "\n";
}

void BoostedEnsemble::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out << to_json_string();
}

BoostedEnsemble BoostedEnsemble::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("model file not found: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "nids.gbt.v1") throw Error("model file " + path + ": unknown format");
    BoostedEnsemble m;
    m.config = config_from_json(j.at("config"));
    m.n_classes = j.at("n_classes").get<int>();
    m.base_score = j.at("base_score").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.gain_by_feature.assign(m.feature_names.size(), FeatureGain{});
    for (const json& e : j.at("gain_by_feature")) {
        auto it = std::find(m.feature_names.begin(), m.feature_names.end(), e.at("feature").get<std::string>());
        if (it == m.feature_names.end()) continue;
        FeatureGain& g = m.gain_by_feature[it - m.feature_names.begin()];
        g.total = e.at("total_gain").get<double>();
        g.splits = e.at("splits").get<long long>();
    }
    for (const json& tj : j.at("trees")) {
        Tree t;
        t.klass = tj.at("class").get<int>();
        node_from_json(tj.at("root"), t);
        m.trees.push_back(std::move(t));
    }
    m.train_loss = j.value("train_loss", std::vector<double>{});
    return m;
}

} // namespace nids::gbt

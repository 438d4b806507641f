#include "nids/isoforest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "nids/kernels.hpp"

namespace nids::isoforest {

using json = nlohmann::ordered_json;

double average_path_length(long long n) {
    if (n < 1) throw Error("average_path_length: n must be >= 1");
    if (n == 1) return 0.0;
    if (n == 2) return 1.0;
    const long long m = n - 1;
    double harmonic;
    if (n <= 1000) {
        harmonic = 0.0;
        for (long long i = 1; i <= m; ++i) harmonic += 1.0 / static_cast<double>(i);
    } else {
        constexpr double euler_mascheroni = 0.5772156649015329;
        harmonic = std::log(static_cast<double>(m)) + euler_mascheroni;
    }
    return 2.0 * harmonic - 2.0 * static_cast<double>(m) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

namespace {

struct TreeBuildCtx {
    const Matrix& X;
    int height_limit;
    std::mt19937_64 engine;
    IsoTree tree;
    std::vector<int> feature_pool; // scratch: features with spread at the node

    int build(std::vector<int>& rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(IsoNode{});
        if (rows.size() <= 1 || depth >= height_limit) {
            tree.nodes[id].size = static_cast<int>(rows.size());
            return id;
        }

        feature_pool.clear();
        std::vector<double> lo(X.cols), hi(X.cols);
        for (std::size_t f = 0; f < X.cols; ++f) {
            double mn = X(rows[0], f), mx = mn;
            for (std::size_t r = 1; r < rows.size(); ++r) {
                const double v = X(rows[r], f);
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            lo[f] = mn;
            hi[f] = mx;
            if (mx > mn) feature_pool.push_back(static_cast<int>(f));
        }
        if (feature_pool.empty()) { // all rows identical on every feature
            tree.nodes[id].size = static_cast<int>(rows.size());
            return id;
        }

        std::uniform_int_distribution<std::size_t> pick(0, feature_pool.size() - 1);
        const int f = feature_pool[pick(engine)];
        std::uniform_real_distribution<double> u(lo[f], hi[f]);
        double split = u(engine);
        if (!(split > lo[f])) split = std::nextafter(lo[f], hi[f]); // keep both children nonempty

        std::vector<int> left, right;
        for (int r : rows) (X(r, f) < split ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[id].feature = f;
        tree.nodes[id].split = split;
        const int l = build(left, depth + 1);
        const int r = build(right, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }
};

} // namespace

IsoForest fit(const preprocess::FeatureMatrix& Xm, int t, int psi, std::uint64_t seed) {
    const Matrix& X = Xm.values;
    if (t < 1) throw Error("isoforest fit: tree count must be >= 1");
    if (psi < 2) throw Error("isoforest fit: psi must be >= 2");
    if (static_cast<std::size_t>(psi) > X.rows)
        throw Error("isoforest fit: psi (" + std::to_string(psi) + ") exceeds row count (" + std::to_string(X.rows) +
                    ")");

    IsoForest forest;
    forest.psi = psi;
    forest.seed = seed;
    forest.height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
    forest.trees.resize(t);

    kernels::parallel_for(static_cast<std::size_t>(t), [&](std::size_t ti) {
        TreeBuildCtx ctx{X, forest.height_limit, std::mt19937_64(mix_seed(seed, ti)), {}, {}};
        // uniform subsample of psi rows without replacement (partial Fisher-Yates)
        std::vector<int> all(X.rows);
        std::iota(all.begin(), all.end(), 0);
        std::vector<int> rows(psi);
        for (int j = 0; j < psi; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, all.size() - 1);
            std::swap(all[j], all[pick(ctx.engine)]);
            rows[j] = all[j];
        }
        ctx.build(rows, 0);
        forest.trees[ti] = std::move(ctx.tree);
    });
    return forest;
}

// ---------------------------------------------------------------------------
// scoring
// ---------------------------------------------------------------------------

double path_length(const IsoTree& tree, std::span<const double> row) {
    const IsoNode* node = &tree.nodes[0];
    double edges = 0.0;
    while (!node->is_external()) {
        node = &tree.nodes[row[node->feature] < node->split ? node->left : node->right];
        edges += 1.0;
    }
    if (node->size > 1) edges += average_path_length(node->size);
    return edges;
}

double score(const IsoForest& f, std::span<const double> row) {
    double sum = 0.0;
    for (const IsoTree& t : f.trees) sum += path_length(t, row);
    const double mean = sum / static_cast<double>(f.trees.size());
    return std::exp2(-mean / average_path_length(f.psi));
}

std::vector<double> score_all(const IsoForest& f, const Matrix& X) {
    std::vector<double> out(X.rows);
    kernels::parallel_for(X.rows, [&](std::size_t i) { out[i] = score(f, X.row(i)); });
    return out;
}

std::vector<ClassAnomaly> class_anomaly_ranking(const IsoForest& f, const preprocess::FeatureMatrix& X) {
    std::vector<double> scores = score_all(f, X.values);
    std::vector<ClassAnomaly> per_class(X.class_names.size());
    for (std::size_t c = 0; c < X.class_names.size(); ++c) per_class[c].class_name = X.class_names[c];
    for (std::size_t i = 0; i < scores.size(); ++i) {
        ClassAnomaly& a = per_class[X.class_ids[i]];
        a.mean_score += scores[i];
        a.count += 1;
    }
    std::vector<ClassAnomaly> out;
    for (ClassAnomaly& a : per_class) {
        if (a.count == 0) continue;
        a.mean_score /= static_cast<double>(a.count);
        a.mean_decision = 0.5 - a.mean_score;
        out.push_back(std::move(a));
    }
    std::sort(out.begin(), out.end(), [](const ClassAnomaly& a, const ClassAnomaly& b) {
        if (a.mean_score != b.mean_score) return a.mean_score > b.mean_score;
        return a.class_name < b.class_name;
    });
    return out;
}

void write_ranking_csv(std::ostream& out, const std::vector<ClassAnomaly>& ranking) {
    out << "class,mean_score,mean_decision,count\n";
    for (const ClassAnomaly& a : ranking)
        out << a.class_name << ',' << format_double(a.mean_score) << ',' << format_double(a.mean_decision) << ','
            << a.count << '\n';
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

void IsoForest::save(const std::string& path) const {
    json j;
    j["format"] = "nids.isoforest.v1";
    j["psi"] = psi;
    j["height_limit"] = height_limit;
    j["seed"] = seed;
    json trees_json = json::array();
    for (const IsoTree& t : trees) {
        json nodes = json::array();
        for (const IsoNode& n : t.nodes) {
            json e;
            if (n.is_external()) {
                e["size"] = n.size;
            } else {
                e["feature"] = n.feature;
                e["split"] = n.split;
                e["left"] = n.left;
                e["right"] = n.right;
            }
            nodes.push_back(std::move(e));
        }
        trees_json.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees_json);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write isoforest file: " + path);
    out << j.dump() << '\n';
}

IsoForest IsoForest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("isoforest file not found: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "nids.isoforest.v1") throw Error("isoforest file " + path + ": unknown format");
    IsoForest f;
    f.psi = j.at("psi").get<int>();
    f.height_limit = j.at("height_limit").get<int>();
    f.seed = j.at("seed").get<std::uint64_t>();
    for (const json& tj : j.at("trees")) {
        IsoTree t;
        for (const json& e : tj) {
            IsoNode n;
            if (e.contains("size")) {
                n.size = e.at("size").get<int>();
            } else {
                n.feature = e.at("feature").get<int>();
                n.split = e.at("split").get<double>();
                n.left = e.at("left").get<int>();
                n.right = e.at("right").get<int>();
            }
            t.nodes.push_back(n);
        }
        f.trees.push_back(std::move(t));
    }
    return f;
}

} // namespace nids::isoforest

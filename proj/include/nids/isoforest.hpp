#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nids/encoder.hpp"
#include "nids/matrix.hpp"

namespace nids::isoforest {

// internal: feature >= 0, x < split goes left; external: feature == -1, size = training rows that reached it
struct IsoNode {
    int feature = -1;
    double split = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;

    bool is_external() const { return feature < 0; }
};

struct IsoTree {
    std::vector<IsoNode> nodes; // nodes[0] is the root
};

struct IsoForest {
    std::vector<IsoTree> trees;
    int psi = 0; // subsample size per tree
    int height_limit = 0;
    std::uint64_t seed = 0;

    void save(const std::string& path) const;
    static IsoForest load(const std::string& path);
};

// c(n): average path length of an unsuccessful binary-search-tree lookup;
// c(1)=0, c(2)=1, else 2*H(n-1) - 2(n-1)/n (harmonic sum exact up to n=1000,
// ln + Euler-Mascheroni above).
double average_path_length(long long n);

// t trees, each on a seeded uniform subsample of psi rows; random feature with
// nonzero spread, uniform split in (min, max); height limit ceil(log2 psi).
IsoForest fit(const preprocess::FeatureMatrix& X, int t, int psi, std::uint64_t seed);

// edges to the external node plus c(size) when the external node holds > 1 row
double path_length(const IsoTree& tree, std::span<const double> row);

// s(x, psi) = 2^(-mean_path/c(psi)), always in (0,1)
double score(const IsoForest& f, std::span<const double> row);
std::vector<double> score_all(const IsoForest& f, const Matrix& X);

struct ClassAnomaly {
    std::string class_name;
    double mean_score = 0.0;
    double mean_decision = 0.0; // 0.5 - mean score; negative = more anomalous
    long long count = 0;
};

// most anomalous class first (highest mean score)
std::vector<ClassAnomaly> class_anomaly_ranking(const IsoForest& f, const preprocess::FeatureMatrix& X);

void write_ranking_csv(std::ostream& out, const std::vector<ClassAnomaly>& ranking);

} // namespace nids::isoforest

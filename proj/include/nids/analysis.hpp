#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "nids/encoder.hpp"

namespace nids::analysis {

inline constexpr int kHistogramBins = 20;

// Per-(class, feature) order statistics. Quartiles interpolate linearly between
// order statistics (type 7); histogram bins are equal-width over the feature's
// global [min, max] across all classes.
struct FeatureSummary {
    std::string class_name;
    std::string feature_name;
    long long count = 0;
    double mean = 0.0;
    double variance = 0.0; // population variance
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::array<long long, kHistogramBins> histogram{};
    double hist_lo = 0.0, hist_hi = 0.0; // global bin range
};

std::vector<FeatureSummary> feature_summaries(const preprocess::FeatureMatrix& m,
                                              const std::vector<std::string>& features,
                                              const std::vector<std::string>& classes);

struct PairedSummary {
    FeatureSummary real;
    FeatureSummary synthetic;
    double abs_mean_diff = 0.0;
};

// Overlay data for a real-vs-reconstructed class: one paired summary per feature.
std::vector<PairedSummary> real_vs_synthetic_summary(const preprocess::FeatureMatrix& real,
                                                     const preprocess::FeatureMatrix& synthetic,
                                                     const std::string& class_name);

void write_summaries_csv(std::ostream& out, const std::vector<FeatureSummary>& summaries);
void write_paired_csv(std::ostream& out, const std::vector<PairedSummary>& pairs);

} // namespace nids::analysis

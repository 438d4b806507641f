#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nids/dataset.hpp"
#include "nids/matrix.hpp"

namespace nids::preprocess {

enum class Directive { onehot, ordinal, minmax, passthrough };

const char* directive_name(Directive d);
Directive directive_from(const std::string& s);

// Per-column encoding plan. Columns without an explicit directive fall back to
// minmax (continuous) / ordinal (categorical, label).
struct EncoderPlan {
    std::map<std::string, Directive> directives;

    Directive directive_for(const ingest::ColumnSpec& col) const;
    static EncoderPlan nslkdd_default(); // protocol_type onehot; service/flag ordinal; rest minmax
};

struct EncodedColumn {
    std::string source;                // source column name
    ingest::ColumnKind source_kind = ingest::ColumnKind::continuous;
    Directive directive = Directive::minmax;
    std::vector<std::string> vocab;    // onehot/ordinal: sorted distinct tokens
    double min = 0.0, max = 0.0;       // minmax
    int out_start = 0;
    int out_width = 1;
};

struct FittedEncoder {
    std::vector<EncodedColumn> columns;      // schema order, label excluded
    std::vector<std::string> feature_names;
    std::string label_column;
    std::vector<std::string> label_vocab;    // sorted class names; id = index

    int width() const { return static_cast<int>(feature_names.size()); }

    void save(const std::string& path) const;
    static FittedEncoder load(const std::string& path);
};

struct FeatureMatrix {
    Matrix values;
    std::vector<std::string> feature_names;
    std::vector<int> class_ids;
    std::vector<std::string> class_names;

    std::size_t n_rows() const { return values.rows; }
    FeatureMatrix subset(const std::vector<int>& indices) const;
};

struct SplitIndices {
    std::vector<int> train, val, test;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings; // e.g. classes too small to stratify
};

// Vocabularies/ranges are read from `train_view` only; pass the training rows.
FittedEncoder fit_encoders(const ingest::TabularDataset& train_view, const EncoderPlan& plan);

// onehot -> indicator block (unseen token: all zeros); ordinal -> 0-based code
// (unseen token: |vocab|); minmax -> (v-min)/(max-min), constant columns -> 0.
FeatureMatrix transform(const FittedEncoder& enc, const ingest::TabularDataset& ds);

// Arg-max decode for onehot, round+clamp for ordinal, linear inverse for minmax.
ingest::TabularDataset inverse_transform(const FittedEncoder& enc, const FeatureMatrix& m);

SplitIndices stratified_split(const FeatureMatrix& m, std::array<double, 3> ratios, std::uint64_t seed);
// same allocation on bare labels; used before any encoder exists
SplitIndices stratified_split_ids(const std::vector<int>& class_ids, std::size_t n_classes,
                                  std::array<double, 3> ratios, std::uint64_t seed);

} // namespace nids::preprocess

#include "nids/encoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "nids/kernels.hpp"

namespace nids::preprocess {

using ingest::ColumnKind;
using json = nlohmann::ordered_json;

const char* directive_name(Directive d) {
    switch (d) {
    case Directive::onehot: return "onehot";
    case Directive::ordinal: return "ordinal";
    case Directive::minmax: return "minmax";
    case Directive::passthrough: return "passthrough";
    }
    return "?";
}

Directive directive_from(const std::string& s) {
    if (s == "onehot") return Directive::onehot;
    if (s == "ordinal") return Directive::ordinal;
    if (s == "minmax") return Directive::minmax;
    if (s == "passthrough") return Directive::passthrough;
    throw Error("encoder plan: unknown directive '" + s + "'");
}

Directive EncoderPlan::directive_for(const ingest::ColumnSpec& col) const {
    auto it = directives.find(col.name);
    if (it != directives.end()) return it->second;
    if (col.kind == ColumnKind::continuous) return Directive::minmax;
    return Directive::ordinal;
}

EncoderPlan EncoderPlan::nslkdd_default() {
    EncoderPlan p;
    p.directives["protocol_type"] = Directive::onehot;
    p.directives["service"] = Directive::ordinal; // high cardinality
    p.directives["flag"] = Directive::ordinal;
    return p;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> sorted_vocab(const std::vector<std::string>& tokens) {
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    return {distinct.begin(), distinct.end()};
}

int vocab_code(const std::vector<std::string>& vocab, const std::string& token) {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), token);
    if (it != vocab.end() && *it == token) return static_cast<int>(it - vocab.begin());
    return static_cast<int>(vocab.size()); // reserved code for unseen tokens
}

} // namespace

FittedEncoder fit_encoders(const ingest::TabularDataset& train_view, const EncoderPlan& plan) {
    train_view.schema.validate();
    if (train_view.n_rows() == 0) throw Error("fit_encoders: empty training view");

    FittedEncoder enc;
    for (const auto& spec : train_view.schema.columns) {
        const ingest::Column& col = train_view.columns[spec.position];
        if (spec.kind == ColumnKind::label) {
            Directive d = plan.directive_for(spec);
            if (d != Directive::ordinal)
                throw Error("fit_encoders: label column '" + spec.name + "' must use the ordinal directive");
            enc.label_column = spec.name;
            enc.label_vocab = sorted_vocab(col.tok);
            continue;
        }
        EncodedColumn ec;
        ec.source = spec.name;
        ec.source_kind = spec.kind;
        ec.directive = plan.directive_for(spec);
        ec.out_start = enc.width();
        switch (ec.directive) {
        case Directive::onehot:
        case Directive::ordinal:
            if (spec.kind != ColumnKind::categorical)
                throw Error("fit_encoders: " + std::string(directive_name(ec.directive)) +
                            " directive on non-categorical column '" + spec.name + "'");
            ec.vocab = sorted_vocab(col.tok);
            if (ec.directive == Directive::onehot) {
                ec.out_width = static_cast<int>(ec.vocab.size());
                for (const std::string& v : ec.vocab) enc.feature_names.push_back(spec.name + "=" + v);
            } else {
                ec.out_width = 1;
                enc.feature_names.push_back(spec.name);
            }
            break;
        case Directive::minmax: {
            if (spec.kind != ColumnKind::continuous)
                throw Error("fit_encoders: minmax directive on non-continuous column '" + spec.name + "'");
            auto [lo, hi] = std::minmax_element(col.num.begin(), col.num.end());
            ec.min = *lo;
            ec.max = *hi;
            if (std::isnan(ec.min) || std::isnan(ec.max))
                throw Error("fit_encoders: column '" + spec.name + "' holds missing cells; clean the dataset first");
            ec.out_width = 1;
            enc.feature_names.push_back(spec.name);
            break;
        }
        case Directive::passthrough:
            if (spec.kind != ColumnKind::continuous)
                throw Error("fit_encoders: passthrough directive on non-continuous column '" + spec.name + "'");
            ec.out_width = 1;
            enc.feature_names.push_back(spec.name);
            break;
        }
        enc.columns.push_back(std::move(ec));
    }
    if (enc.label_vocab.empty()) throw Error("fit_encoders: schema has no label column");
    return enc;
}

// ---------------------------------------------------------------------------
// transform / inverse
// ---------------------------------------------------------------------------

namespace {

void check_schema_match(const FittedEncoder& enc, const ingest::TabularDataset& ds) {
    std::size_t e = 0;
    for (const auto& spec : ds.schema.columns) {
        if (spec.kind == ColumnKind::label) {
            if (spec.name != enc.label_column)
                throw Error("transform: label column mismatch ('" + spec.name + "' vs '" + enc.label_column + "')");
            continue;
        }
        if (e >= enc.columns.size() || enc.columns[e].source != spec.name || enc.columns[e].source_kind != spec.kind)
            throw Error("transform: dataset schema does not match the fitted encoder at column '" + spec.name + "'");
        ++e;
    }
    if (e != enc.columns.size()) throw Error("transform: dataset schema is missing encoder columns");
}

} // namespace

FeatureMatrix transform(const FittedEncoder& enc, const ingest::TabularDataset& ds) {
    check_schema_match(enc, ds);
    const std::size_t n = ds.n_rows();
    FeatureMatrix out;
    out.feature_names = enc.feature_names;
    out.class_names = enc.label_vocab;
    out.values = Matrix(n, enc.feature_names.size());
    out.class_ids.resize(n);

    const int label_pos = ds.schema.label_position();
    const auto& labels = ds.columns[label_pos].tok;

    std::atomic<int> label_err{-1};
    kernels::parallel_for(n, [&](std::size_t i) {
        double* row = out.values.data.data() + i * out.values.cols;
        std::size_t e = 0;
        for (const auto& spec : ds.schema.columns) {
            if (spec.kind == ColumnKind::label) continue;
            const EncodedColumn& ec = enc.columns[e++];
            const ingest::Column& col = ds.columns[spec.position];
            double* cell = row + ec.out_start;
            switch (ec.directive) {
            case Directive::onehot: {
                int code = vocab_code(ec.vocab, col.tok[i]);
                for (int j = 0; j < ec.out_width; ++j) cell[j] = 0.0;
                if (code < ec.out_width) cell[code] = 1.0; // unseen -> all-zeros block
                break;
            }
            case Directive::ordinal:
                cell[0] = static_cast<double>(vocab_code(ec.vocab, col.tok[i]));
                break;
            case Directive::minmax: {
                double v = col.num[i];
                double span = ec.max - ec.min;
                cell[0] = span > 0.0 ? (v - ec.min) / span : 0.0;
                break;
            }
            case Directive::passthrough:
                cell[0] = col.num[i];
                break;
            }
        }
        int code = vocab_code(enc.label_vocab, labels[i]);
        if (code >= static_cast<int>(enc.label_vocab.size())) label_err.store(static_cast<int>(i));
        out.class_ids[i] = code;
    });
    if (label_err.load() >= 0)
        throw Error("transform: row " + std::to_string(label_err.load()) +
                    " has a label outside the fitted vocabulary: '" + labels[label_err.load()] + "'");
    for (double v : out.values.data)
        if (!std::isfinite(v)) throw Error("transform: non-finite value in encoded matrix; clean the dataset first");
    return out;
}

ingest::TabularDataset inverse_transform(const FittedEncoder& enc, const FeatureMatrix& m) {
    if (m.feature_names != enc.feature_names)
        throw Error("inverse_transform: matrix layout does not match the fitted encoder");
    const std::size_t n = m.n_rows();

    ingest::TabularDataset ds;
    int pos = 0;
    for (const EncodedColumn& ec : enc.columns) {
        ds.schema.columns.push_back(
            {ec.source,
             ec.source_kind == ColumnKind::categorical ? ColumnKind::categorical : ColumnKind::continuous, pos++});
    }
    ds.schema.columns.push_back({enc.label_column, ColumnKind::label, pos});
    ds.provenance = "inverse_transform";
    ds.columns.resize(ds.schema.size());
    for (std::size_t c = 0; c + 1 < ds.columns.size(); ++c) {
        ds.columns[c].kind = ds.schema.columns[c].kind;
        if (ds.columns[c].kind == ColumnKind::continuous)
            ds.columns[c].num.resize(n);
        else
            ds.columns[c].tok.resize(n);
    }
    ingest::Column& label_col = ds.columns.back();
    label_col.kind = ColumnKind::label;
    label_col.tok.resize(n);

    kernels::parallel_for(n, [&](std::size_t i) {
        const double* row = m.values.data.data() + i * m.values.cols;
        for (std::size_t c = 0; c < enc.columns.size(); ++c) {
            const EncodedColumn& ec = enc.columns[c];
            const double* cell = row + ec.out_start;
            switch (ec.directive) {
            case Directive::onehot: {
                int best = 0;
                for (int j = 1; j < ec.out_width; ++j)
                    if (cell[j] > cell[best]) best = j;
                ds.columns[c].tok[i] = ec.vocab[best];
                break;
            }
            case Directive::ordinal: {
                long code = std::lround(cell[0]);
                long hi = static_cast<long>(ec.vocab.size()) - 1;
                code = std::clamp(code, 0L, hi < 0 ? 0L : hi);
                ds.columns[c].tok[i] = ec.vocab.empty() ? "" : ec.vocab[code];
                break;
            }
            case Directive::minmax: {
                double span = ec.max - ec.min;
                ds.columns[c].num[i] = span > 0.0 ? ec.min + cell[0] * span : ec.min;
                break;
            }
            case Directive::passthrough:
                ds.columns[c].num[i] = cell[0];
                break;
            }
        }
        int id = m.class_ids.empty() ? 0 : m.class_ids[i];
        label_col.tok[i] = id >= 0 && id < static_cast<int>(enc.label_vocab.size()) ? enc.label_vocab[id] : "";
    });
    return ds;
}

FeatureMatrix FeatureMatrix::subset(const std::vector<int>& indices) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.class_names = class_names;
    out.values = Matrix(indices.size(), values.cols);
    out.class_ids.resize(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const int i = indices[j];
        std::copy_n(values.data.data() + std::size_t(i) * values.cols, values.cols,
                    out.values.data.data() + j * values.cols);
        out.class_ids[j] = class_ids.empty() ? 0 : class_ids[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// stratified split
// ---------------------------------------------------------------------------

SplitIndices stratified_split_ids(const std::vector<int>& class_ids, std::size_t n_classes,
                                  std::array<double, 3> ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (!(ratios[0] > 0 && ratios[1] > 0 && ratios[2] > 0) || std::abs(sum - 1.0) > 1e-9)
        throw Error("stratified_split: ratios must be positive and sum to 1");

    std::vector<std::vector<int>> by_class(n_classes);
    for (std::size_t i = 0; i < class_ids.size(); ++i) by_class[class_ids[i]].push_back(static_cast<int>(i));

    SplitIndices out;
    out.seed = seed;
    std::mt19937_64 engine(seed);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<int>& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), engine);
        const std::size_t n = idx.size();
        if (n == 0) continue;
        if (n < 3) {
            out.warnings.push_back("class id " + std::to_string(c) + " has " + std::to_string(n) +
                                   " rows; all assigned to train");
            out.train.insert(out.train.end(), idx.begin(), idx.end());
            continue;
        }
        // largest-remainder allocation keeps every partition within 1 row of n*r
        std::array<double, 3> want{ratios[0] * n, ratios[1] * n, ratios[2] * n};
        std::array<std::size_t, 3> take{static_cast<std::size_t>(want[0]), static_cast<std::size_t>(want[1]),
                                        static_cast<std::size_t>(want[2])};
        std::size_t rem = n - (take[0] + take[1] + take[2]);
        std::array<int, 3> order{0, 1, 2};
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return want[a] - std::floor(want[a]) > want[b] - std::floor(want[b]);
        });
        for (std::size_t r = 0; r < rem; ++r) ++take[order[r]];

        std::size_t at = 0;
        out.train.insert(out.train.end(), idx.begin() + at, idx.begin() + at + take[0]);
        at += take[0];
        out.val.insert(out.val.end(), idx.begin() + at, idx.begin() + at + take[1]);
        at += take[1];
        out.test.insert(out.test.end(), idx.begin() + at, idx.begin() + at + take[2]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitIndices stratified_split(const FeatureMatrix& m, std::array<double, 3> ratios, std::uint64_t seed) {
    return stratified_split_ids(m.class_ids, m.class_names.size(), ratios, seed);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

void FittedEncoder::save(const std::string& path) const {
    json j;
    j["format"] = "nids.encoder.v1";
    j["label_column"] = label_column;
    j["label_vocab"] = label_vocab;
    json cols = json::array();
    for (const EncodedColumn& ec : columns) {
        json c;
        c["source"] = ec.source;
        c["source_kind"] = ec.source_kind == ColumnKind::categorical ? "categorical" : "continuous";
        c["directive"] = directive_name(ec.directive);
        if (ec.directive == Directive::onehot || ec.directive == Directive::ordinal) c["vocab"] = ec.vocab;
        if (ec.directive == Directive::minmax) {
            c["min"] = ec.min;
            c["max"] = ec.max;
        }
        c["out_start"] = ec.out_start;
        c["out_width"] = ec.out_width;
        cols.push_back(std::move(c));
    }
    j["columns"] = std::move(cols);
    j["feature_names"] = feature_names;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write encoder file: " + path);
    out << j.dump(2) << '\n';
}

FittedEncoder FittedEncoder::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("encoder file not found: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "nids.encoder.v1") throw Error("encoder file " + path + ": unknown format");
    FittedEncoder enc;
    enc.label_column = j.at("label_column").get<std::string>();
    enc.label_vocab = j.at("label_vocab").get<std::vector<std::string>>();
    for (const json& c : j.at("columns")) {
        EncodedColumn ec;
        ec.source = c.at("source").get<std::string>();
        ec.source_kind =
            c.at("source_kind").get<std::string>() == "categorical" ? ColumnKind::categorical : ColumnKind::continuous;
        ec.directive = directive_from(c.at("directive").get<std::string>());
        if (c.contains("vocab")) ec.vocab = c.at("vocab").get<std::vector<std::string>>();
        ec.min = c.value("min", 0.0);
        ec.max = c.value("max", 0.0);
        ec.out_start = c.at("out_start").get<int>();
        ec.out_width = c.at("out_width").get<int>();
        enc.columns.push_back(std::move(ec));
    }
    enc.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    return enc;
}

} // namespace nids::preprocess

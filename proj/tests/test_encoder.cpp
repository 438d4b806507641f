#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nids/dataset.hpp"
#include "nids/encoder.hpp"
#include "nids/synthetic.hpp"

using namespace nids;
using namespace nids::ingest;
using namespace nids::preprocess;

namespace {

Schema tiny_schema() {
    Schema s;
    s.columns = {{"x", ColumnKind::continuous, 0},
                 {"proto", ColumnKind::categorical, 1},
                 {"flag", ColumnKind::categorical, 2},
                 {"label", ColumnKind::label, 3}};
    s.validate();
    return s;
}

TabularDataset tiny_dataset() {
    std::istringstream in("1.5,tcp,SF,a\n2.5,udp,S0,b\n3.5,icmp,SF,a\n0.5,tcp,REJ,b\n");
    return parse_nslkdd(in, tiny_schema(), "test");
}

EncoderPlan tiny_plan() {
    EncoderPlan p;
    p.directives["proto"] = Directive::onehot;
    p.directives["flag"] = Directive::ordinal;
    return p;
}

TabularDataset synth_clean(int rows, std::uint64_t seed) {
    synth::SynthOptions opt;
    opt.rows = rows;
    opt.seed = seed;
    std::ostringstream text;
    synth::write_sample(text, opt);
    std::istringstream in(text.str());
    TabularDataset ds = parse_nslkdd(in, Schema::nslkdd(), "synth");
    return clean(ds).dataset;
}

} // namespace

TEST_CASE("fit produces sorted vocabularies and layout") {
    FittedEncoder enc = fit_encoders(tiny_dataset(), tiny_plan());
    REQUIRE(enc.columns.size() == 3);
    CHECK(enc.columns[1].vocab == std::vector<std::string>{"icmp", "tcp", "udp"});
    CHECK(enc.columns[1].out_width == 3);
    CHECK(enc.columns[2].vocab == std::vector<std::string>{"REJ", "S0", "SF"});
    CHECK(enc.columns[2].out_width == 1);
    CHECK(enc.width() == 5); // minmax + onehot(3) + ordinal
    CHECK(enc.label_vocab == std::vector<std::string>{"a", "b"});
    CHECK(enc.feature_names[1] == "proto=icmp");
}

TEST_CASE("onehot directive on a continuous column is rejected") {
    EncoderPlan p = tiny_plan();
    p.directives["x"] = Directive::onehot;
    CHECK_THROWS_AS(fit_encoders(tiny_dataset(), p), Error);
}

TEST_CASE("constant continuous column fits (c, c) and maps to 0") {
    std::istringstream in("7,tcp,SF,a\n7,udp,SF,b\n7,tcp,SF,a\n");
    TabularDataset ds = parse_nslkdd(in, tiny_schema(), "test");
    FittedEncoder enc = fit_encoders(ds, tiny_plan());
    CHECK(enc.columns[0].min == 7.0);
    CHECK(enc.columns[0].max == 7.0);
    FeatureMatrix m = transform(enc, ds);
    for (std::size_t i = 0; i < m.n_rows(); ++i) CHECK(m.values(i, 0) == 0.0);
}

TEST_CASE("transform encodes onehot, ordinal and minmax as specified") {
    TabularDataset ds = tiny_dataset();
    FittedEncoder enc = fit_encoders(ds, tiny_plan());
    FeatureMatrix m = transform(enc, ds);

    // row 1: x=2.5, proto=udp, flag=S0, label=b
    CHECK(m.values(1, 0) == doctest::Approx((2.5 - 0.5) / 3.0));
    CHECK(m.values(1, 1) == 0.0); // icmp
    CHECK(m.values(1, 2) == 0.0); // tcp
    CHECK(m.values(1, 3) == 1.0); // udp
    CHECK(m.values(1, 4) == 1.0); // S0 -> index 1
    CHECK(m.class_ids[1] == 1);

    // min -> 0, max -> 1
    CHECK(m.values(3, 0) == 0.0);
    CHECK(m.values(2, 0) == 1.0);
}

TEST_CASE("unseen tokens get the reserved code / zero block") {
    TabularDataset train = tiny_dataset();
    FittedEncoder enc = fit_encoders(train, tiny_plan());

    std::istringstream in("1.5,gre,XX,a\n");
    TabularDataset unseen = parse_nslkdd(in, tiny_schema(), "test");
    FeatureMatrix m = transform(enc, unseen);
    CHECK(m.values(0, 1) == 0.0);
    CHECK(m.values(0, 2) == 0.0);
    CHECK(m.values(0, 3) == 0.0); // all-zeros onehot block
    CHECK(m.values(0, 4) == 3.0); // |vocab| = 3 reserved ordinal code
}

TEST_CASE("inverse_transform decodes argmax / rounded codes / linear inverse") {
    TabularDataset ds = tiny_dataset();
    FittedEncoder enc = fit_encoders(ds, tiny_plan());
    FeatureMatrix m = transform(enc, ds);

    // perturb a onehot block into soft scores: argmax should win
    m.values(0, 1) = 0.1;
    m.values(0, 2) = 0.7;
    m.values(0, 3) = 0.2;
    // ordinal 3.6 with |vocab|=3 clamps to index 2
    m.values(0, 4) = 3.6;
    TabularDataset back = inverse_transform(enc, m);
    CHECK(back.columns[1].tok[0] == "tcp"); // index 1 of [icmp,tcp,udp]
    CHECK(back.columns[2].tok[0] == "SF");  // clamped round to last token
}

TEST_CASE("round-trip on the full cleaned dataset is the identity") {
    TabularDataset ds = synth_clean(1500, 41);
    FittedEncoder enc = fit_encoders(ds, EncoderPlan::nslkdd_default());
    FeatureMatrix m = transform(enc, ds);
    TabularDataset back = inverse_transform(enc, m);

    REQUIRE(back.n_rows() == ds.n_rows());
    for (std::size_t c = 0; c < ds.schema.size(); ++c) {
        const Column& orig = ds.columns[c];
        const Column& rt = back.columns[c];
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            if (orig.kind == ColumnKind::continuous) {
                CHECK(rt.num[i] == doctest::Approx(orig.num[i]).epsilon(1e-12));
            } else {
                CHECK(rt.tok[i] == orig.tok[i]);
            }
        }
    }

    // matrix-level round trip: transform(inverse_transform(m)) == m
    FeatureMatrix m2 = transform(enc, back);
    REQUIRE(m2.values.data.size() == m.values.data.size());
    for (std::size_t i = 0; i < m.values.data.size(); ++i)
        CHECK(m2.values.data[i] == doctest::Approx(m.values.data[i]).epsilon(1e-12));
}

TEST_CASE("encoded matrices are finite for cleaned data") {
    TabularDataset ds = synth_clean(800, 43);
    FittedEncoder enc = fit_encoders(ds, EncoderPlan::nslkdd_default());
    FeatureMatrix m = transform(enc, ds);
    for (double v : m.values.data) CHECK(std::isfinite(v));
}

TEST_CASE("transform on mismatched schema errors") {
    FittedEncoder enc = fit_encoders(tiny_dataset(), tiny_plan());
    std::istringstream in("1,tcp,2,normal\n");
    Schema other;
    other.columns = {{"a", ColumnKind::continuous, 0},
                     {"proto", ColumnKind::categorical, 1},
                     {"b", ColumnKind::continuous, 2},
                     {"label", ColumnKind::label, 3}};
    TabularDataset ds = parse_nslkdd(in, other, "test");
    CHECK_THROWS_AS(transform(enc, ds), Error);
}

TEST_CASE("encoder JSON round-trip preserves behaviour") {
    TabularDataset ds = tiny_dataset();
    FittedEncoder enc = fit_encoders(ds, tiny_plan());
    enc.save("encoder_test.json");
    FittedEncoder loaded = FittedEncoder::load("encoder_test.json");
    FeatureMatrix a = transform(enc, ds);
    FeatureMatrix b = transform(loaded, ds);
    CHECK(a.values.data == b.values.data);
    CHECK(a.feature_names == b.feature_names);
}

// ---------------------------------------------------------------------------
// stratified split
// ---------------------------------------------------------------------------

namespace {

FeatureMatrix labels_only(const std::vector<int>& ids, int n_classes) {
    FeatureMatrix m;
    m.values = Matrix(ids.size(), 1);
    m.class_ids = ids;
    for (int c = 0; c < n_classes; ++c) m.class_names.push_back("c" + std::to_string(c));
    m.feature_names = {"f"};
    return m;
}

} // namespace

TEST_CASE("split of 100 rows at 60:20:20 is exactly 60/20/20") {
    FeatureMatrix m = labels_only(std::vector<int>(100, 0), 1);
    SplitIndices s = stratified_split(m, {0.6, 0.2, 0.2}, 5);
    CHECK(s.train.size() == 60);
    CHECK(s.val.size() == 20);
    CHECK(s.test.size() == 20);
}

TEST_CASE("split of 10 rows at 60:20:20 is 6/2/2") {
    FeatureMatrix m = labels_only(std::vector<int>(10, 0), 1);
    SplitIndices s = stratified_split(m, {0.6, 0.2, 0.2}, 5);
    CHECK(s.train.size() == 6);
    CHECK(s.val.size() == 2);
    CHECK(s.test.size() == 2);
}

TEST_CASE("same seed gives identical splits, different seed differs") {
    std::vector<int> ids;
    for (int i = 0; i < 500; ++i) ids.push_back(i % 3);
    FeatureMatrix m = labels_only(ids, 3);
    SplitIndices a = stratified_split(m, {0.6, 0.2, 0.2}, 99);
    SplitIndices b = stratified_split(m, {0.6, 0.2, 0.2}, 99);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    SplitIndices c = stratified_split(m, {0.6, 0.2, 0.2}, 100);
    CHECK(a.train != c.train);
}

TEST_CASE("split partitions are disjoint, exhaustive and within 1 row per class") {
    std::vector<int> ids;
    for (int i = 0; i < 1000; ++i) ids.push_back(i < 13 ? 0 : (i < 600 ? 1 : 2)); // class 0 has 13 rows
    FeatureMatrix m = labels_only(ids, 3);
    SplitIndices s = stratified_split(m, {0.6, 0.2, 0.2}, 7);

    std::set<int> seen;
    for (int i : s.train) seen.insert(i);
    for (int i : s.val) seen.insert(i);
    for (int i : s.test) seen.insert(i);
    CHECK(seen.size() == 1000); // disjoint union covers everything
    CHECK(s.train.size() + s.val.size() + s.test.size() == 1000);

    auto count_class = [&](const std::vector<int>& part, int c) {
        long long n = 0;
        for (int i : part) n += ids[i] == c;
        return n;
    };
    const double ratios[3] = {0.6, 0.2, 0.2};
    for (int c = 0; c < 3; ++c) {
        long long per_class = std::count(ids.begin(), ids.end(), c);
        const long long got[3] = {count_class(s.train, c), count_class(s.val, c), count_class(s.test, c)};
        for (int p = 0; p < 3; ++p)
            CHECK(std::abs(static_cast<double>(got[p]) - ratios[p] * static_cast<double>(per_class)) <= 1.0 + 1e-9);
    }
}

TEST_CASE("a class with fewer than 3 rows goes wholly to train with a warning") {
    std::vector<int> ids(50, 0);
    ids[7] = 1;
    ids[22] = 1;
    FeatureMatrix m = labels_only(ids, 2);
    SplitIndices s = stratified_split(m, {0.6, 0.2, 0.2}, 3);
    CHECK(!s.warnings.empty());
    long long c1_train = 0;
    for (int i : s.train) c1_train += ids[i] == 1;
    CHECK(c1_train == 2);
}

TEST_CASE("invalid ratios are rejected") {
    FeatureMatrix m = labels_only(std::vector<int>(10, 0), 1);
    CHECK_THROWS_AS(stratified_split(m, {0.6, 0.2, 0.1}, 1), Error);
    CHECK_THROWS_AS(stratified_split(m, {1.0, 0.0, 0.0}, 1), Error);
}

#include "nids/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "nids/common.hpp"

namespace nids::eval {

using json = nlohmann::ordered_json;

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts)
        for (long long v : row) t += v;
    return t;
}

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<std::string>& class_names) {
    if (pred.size() != truth.size()) throw Error("confusion: prediction/truth length mismatch");
    const int k = static_cast<int>(class_names.size());
    ConfusionMatrix cm;
    cm.class_names = class_names;
    cm.counts.assign(k, std::vector<long long>(k, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= k || pred[i] < 0 || pred[i] >= k)
            throw Error("confusion: class id out of range at row " + std::to_string(i));
        ++cm.counts[truth[i]][pred[i]];
    }
    return cm;
}

ClassMetrics metrics(const ConfusionMatrix& cm) {
    const int k = static_cast<int>(cm.class_names.size());
    if (k == 0 || cm.total() == 0) throw Error("metrics: empty confusion matrix");
    ClassMetrics out;
    out.total = cm.total();
    long long diag = 0;
    for (int c = 0; c < k; ++c) {
        long long row_sum = 0, col_sum = 0;
        for (int j = 0; j < k; ++j) {
            row_sum += cm.counts[c][j];
            col_sum += cm.counts[j][c];
        }
        const long long tp = cm.counts[c][c];
        diag += tp;
        PerClassMetrics m;
        m.name = cm.class_names[c];
        m.support = row_sum;
        m.precision_defined = col_sum > 0;
        m.recall_defined = row_sum > 0;
        m.precision = col_sum > 0 ? static_cast<double>(tp) / col_sum : 0.0;
        m.recall = row_sum > 0 ? static_cast<double>(tp) / row_sum : 0.0;
        m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        out.per_class.push_back(std::move(m));
    }
    out.accuracy = static_cast<double>(diag) / out.total;
    return out;
}

ComparisonReport compare(const ClassMetrics& before, const ClassMetrics& after) {
    if (before.per_class.size() != after.per_class.size()) throw Error("compare: class sets differ");
    for (std::size_t i = 0; i < before.per_class.size(); ++i)
        if (before.per_class[i].name != after.per_class[i].name)
            throw Error("compare: class sets differ at '" + before.per_class[i].name + "'");
    ComparisonReport r;
    r.before = before;
    r.after = after;
    r.d_accuracy = after.accuracy - before.accuracy;
    for (std::size_t i = 0; i < before.per_class.size(); ++i) {
        ClassDelta d;
        d.name = before.per_class[i].name;
        d.d_precision = after.per_class[i].precision - before.per_class[i].precision;
        d.d_recall = after.per_class[i].recall - before.per_class[i].recall;
        d.d_f1 = after.per_class[i].f1 - before.per_class[i].f1;
        d.recall_improved = d.d_recall > 0.01;
        r.deltas.push_back(std::move(d));
    }
    return r;
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

void write_metrics_table(std::ostream& out, const ClassMetrics& m, const std::string& title) {
    std::size_t name_w = 5;
    for (const auto& c : m.per_class) name_w = std::max(name_w, c.name.size());
    out << title << '\n';
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << "Class" << std::right << std::setw(11)
        << "Precision" << std::setw(9) << "Recall" << std::setw(10) << "F1-Score" << std::setw(10) << "Accuracy"
        << '\n';
    bool first = true;
    for (const auto& c : m.per_class) {
        out << std::left << std::setw(static_cast<int>(name_w) + 2) << c.name << std::right << std::setw(11)
            << format_fixed(c.precision, 4) << std::setw(9) << format_fixed(c.recall, 4) << std::setw(10)
            << format_fixed(c.f1, 4);
        if (first) out << std::setw(10) << format_fixed(m.accuracy, 6); // single accuracy cell, first row
        out << '\n';
        first = false;
    }
}

void write_comparison_text(std::ostream& out, const ComparisonReport& r) {
    write_metrics_table(out, r.before, "Model performance before augmentation");
    out << '\n';
    write_metrics_table(out, r.after, "Model performance after augmentation");
    out << '\n';
    out << "Deltas (after - before)\n";
    std::size_t name_w = 5;
    for (const auto& d : r.deltas) name_w = std::max(name_w, d.name.size());
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << "Class" << std::right << std::setw(11)
        << "dPrecision" << std::setw(10) << "dRecall" << std::setw(10) << "dF1" << '\n';
    for (const auto& d : r.deltas) {
        out << std::left << std::setw(static_cast<int>(name_w) + 2) << d.name << std::right << std::setw(11)
            << format_fixed(d.d_precision, 4) << std::setw(10) << format_fixed(d.d_recall, 4) << std::setw(10)
            << format_fixed(d.d_f1, 4);
        if (d.recall_improved) out << "  recall improved";
        out << '\n';
    }
    out << "Accuracy: " << format_fixed(r.before.accuracy, 6) << " -> " << format_fixed(r.after.accuracy, 6)
        << " (delta " << format_fixed(r.d_accuracy, 6) << ")\n";
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
    out << "true\\pred";
    for (const auto& n : cm.class_names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < cm.counts.size(); ++r) {
        out << cm.class_names[r];
        for (long long v : cm.counts[r]) out << ',' << v;
        out << '\n';
    }
}

std::string metrics_to_json(const ClassMetrics& m) {
    json j;
    j["accuracy"] = m.accuracy;
    j["total"] = m.total;
    json classes = json::array();
    for (const auto& c : m.per_class) {
        json e;
        e["class"] = c.name;
        e["precision"] = c.precision;
        e["recall"] = c.recall;
        e["f1"] = c.f1;
        e["support"] = c.support;
        e["precision_defined"] = c.precision_defined;
        e["recall_defined"] = c.recall_defined;
        classes.push_back(std::move(e));
    }
    j["classes"] = std::move(classes);
    return j.dump(2) + "\n";
}

ClassMetrics metrics_from_json(const std::string& text) {
    json j = json::parse(text);
    ClassMetrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.total = j.at("total").get<long long>();
    for (const json& e : j.at("classes")) {
        PerClassMetrics c;
        c.name = e.at("class").get<std::string>();
        c.precision = e.at("precision").get<double>();
        c.recall = e.at("recall").get<double>();
        c.f1 = e.at("f1").get<double>();
        c.support = e.at("support").get<long long>();
        c.precision_defined = e.value("precision_defined", true);
        c.recall_defined = e.value("recall_defined", true);
        m.per_class.push_back(std::move(c));
    }
    return m;
}

} // namespace nids::eval

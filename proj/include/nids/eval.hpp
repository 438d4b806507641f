#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nids/common.hpp"

namespace nids::eval {

struct ConfusionMatrix {
    std::vector<std::vector<long long>> counts; // rows = true class, cols = predicted
    std::vector<std::string> class_names;

    long long total() const;
};

struct PerClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
    bool precision_defined = true; // false when the denominator was 0
    bool recall_defined = true;
};

struct ClassMetrics {
    std::vector<PerClassMetrics> per_class;
    double accuracy = 0.0;
    long long total = 0;
};

struct ClassDelta {
    std::string name;
    double d_precision = 0.0;
    double d_recall = 0.0;
    double d_f1 = 0.0;
    bool recall_improved = false; // recall gained more than 0.01
};

struct ComparisonReport {
    ClassMetrics before;
    ClassMetrics after;
    std::vector<ClassDelta> deltas;
    double d_accuracy = 0.0;
};

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<std::string>& class_names);

ClassMetrics metrics(const ConfusionMatrix& cm);

ComparisonReport compare(const ClassMetrics& before, const ClassMetrics& after);

// aligned text table in the report layout: Class / Precision / Recall / F1-Score / Accuracy
void write_metrics_table(std::ostream& out, const ClassMetrics& m, const std::string& title);
void write_comparison_text(std::ostream& out, const ComparisonReport& r);

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

std::string metrics_to_json(const ClassMetrics& m);
ClassMetrics metrics_from_json(const std::string& text);

} // namespace nids::eval

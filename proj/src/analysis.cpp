#include "nids/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "nids/kernels.hpp"

namespace nids::analysis {

namespace {

// type-7 quantile: linear interpolation between order statistics of sorted v
double quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = p * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

int find_index(const std::vector<std::string>& names, const std::string& name, const char* what) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(std::string("feature_summaries: unknown ") + what + " '" + name + "'");
    return static_cast<int>(it - names.begin());
}

FeatureSummary summarize(std::vector<double>& vals, double glo, double ghi) {
    FeatureSummary s;
    s.count = static_cast<long long>(vals.size());
    s.hist_lo = glo;
    s.hist_hi = ghi;
    if (vals.empty()) return s;
    double sum = 0.0;
    for (double v : vals) sum += v;
    s.mean = sum / vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / vals.size();
    std::sort(vals.begin(), vals.end());
    s.min = vals.front();
    s.max = vals.back();
    s.q1 = quantile(vals, 0.25);
    s.median = quantile(vals, 0.5);
    s.q3 = quantile(vals, 0.75);
    const double span = ghi - glo;
    for (double v : vals) {
        int bin = 0;
        if (span > 0.0) bin = std::min(kHistogramBins - 1, static_cast<int>((v - glo) / span * kHistogramBins));
        ++s.histogram[bin];
    }
    return s;
}

} // namespace

std::vector<FeatureSummary> feature_summaries(const preprocess::FeatureMatrix& m,
                                              const std::vector<std::string>& features,
                                              const std::vector<std::string>& classes) {
    if (features.empty() || classes.empty()) throw Error("feature_summaries: empty selection");
    std::vector<int> fidx, cidx;
    for (const auto& f : features) fidx.push_back(find_index(m.feature_names, f, "feature"));
    for (const auto& c : classes) cidx.push_back(find_index(m.class_names, c, "class"));

    // global per-feature range fixes the histogram bin edges for all classes
    std::vector<double> glo(fidx.size()), ghi(fidx.size());
    for (std::size_t j = 0; j < fidx.size(); ++j) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            double v = m.values(r, fidx[j]);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        glo[j] = m.n_rows() ? lo : 0.0;
        ghi[j] = m.n_rows() ? hi : 0.0;
    }

    std::vector<FeatureSummary> out(cidx.size() * fidx.size());
    kernels::parallel_for(out.size(), [&](std::size_t k) {
        const std::size_t ci = k / fidx.size();
        const std::size_t fj = k % fidx.size();
        std::vector<double> vals;
        for (std::size_t r = 0; r < m.n_rows(); ++r)
            if (m.class_ids[r] == cidx[ci]) vals.push_back(m.values(r, fidx[fj]));
        FeatureSummary s = summarize(vals, glo[fj], ghi[fj]);
        s.class_name = classes[ci];
        s.feature_name = features[fj];
        out[k] = std::move(s);
    });
    return out;
}

std::vector<PairedSummary> real_vs_synthetic_summary(const preprocess::FeatureMatrix& real,
                                                     const preprocess::FeatureMatrix& synthetic,
                                                     const std::string& class_name) {
    if (real.feature_names != synthetic.feature_names)
        throw Error("real_vs_synthetic_summary: matrices have different layouts");
    std::vector<std::string> cls{class_name};
    auto r = feature_summaries(real, real.feature_names, cls);
    auto s = feature_summaries(synthetic, synthetic.feature_names, cls);
    std::vector<PairedSummary> out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        PairedSummary p;
        p.real = r[i];
        p.synthetic = s[i];
        p.abs_mean_diff = std::abs(r[i].mean - s[i].mean);
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

void summary_fields(std::ostream& out, const FeatureSummary& s) {
    out << s.count << ',' << format_double(s.mean) << ',' << format_double(s.variance) << ',' << format_double(s.min)
        << ',' << format_double(s.q1) << ',' << format_double(s.median) << ',' << format_double(s.q3) << ','
        << format_double(s.max);
}

} // namespace

void write_summaries_csv(std::ostream& out, const std::vector<FeatureSummary>& summaries) {
    out << "class,feature,count,mean,variance,min,q1,median,q3,max,hist_lo,hist_hi";
    for (int b = 0; b < kHistogramBins; ++b) out << ",bin" << b;
    out << '\n';
    for (const auto& s : summaries) {
        out << s.class_name << ',' << s.feature_name << ',';
        summary_fields(out, s);
        out << ',' << format_double(s.hist_lo) << ',' << format_double(s.hist_hi);
        for (long long b : s.histogram) out << ',' << b;
        out << '\n';
    }
}

void write_paired_csv(std::ostream& out, const std::vector<PairedSummary>& pairs) {
    out << "feature,real_count,real_mean,real_variance,real_min,real_q1,real_median,real_q3,real_max,"
           "synth_count,synth_mean,synth_variance,synth_min,synth_q1,synth_median,synth_q3,synth_max,abs_mean_diff\n";
    for (const auto& p : pairs) {
        out << p.real.feature_name << ',';
        summary_fields(out, p.real);
        out << ',';
        summary_fields(out, p.synthetic);
        out << ',' << format_double(p.abs_mean_diff) << '\n';
    }
}

} // namespace nids::analysis

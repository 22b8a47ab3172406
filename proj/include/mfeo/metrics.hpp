#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mfeo/common.hpp"

namespace mfeo::metrics {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

// One-vs-rest counts for class c.
inline ConfusionCounts confusion(const std::vector<int>& predictions,
                                 const std::vector<int>& labels, int c) {
    if (predictions.empty() || predictions.size() != labels.size()) {
        throw DataError("confusion: prediction/label lengths must match and be nonzero");
    }
    ConfusionCounts counts;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred_pos = predictions[i] == c;
        const bool true_pos = labels[i] == c;
        if (pred_pos && true_pos)
            ++counts.tp;
        else if (pred_pos && !true_pos)
            ++counts.fp;
        else if (!pred_pos && true_pos)
            ++counts.fn;
        else
            ++counts.tn;
    }
    return counts;
}

// Ratio metrics use the 0/0 -> 0 convention. Percent scaling is left to
// renderers; everything here lives in [0,1].
inline double ratio(double num, double denom) { return denom == 0.0 ? 0.0 : num / denom; }

inline double precision(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
}

inline double recall(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}

// Same formula as recall; kept as its own entry point because reports carry
// both names.
inline double sensitivity(const ConfusionCounts& c) { return recall(c); }

inline double specificity(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tn), static_cast<double>(c.tn + c.fp));
}

inline double accuracy(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tp + c.tn), static_cast<double>(c.total()));
}

inline double f_measure(const ConfusionCounts& c) {
    const double p = precision(c);
    const double r = recall(c);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// Mean absolute error, |predicted - truth| averaged.
inline double mae(const std::vector<double>& predicted, const std::vector<double>& truth) {
    if (predicted.empty() || predicted.size() != truth.size()) {
        throw DataError("mae: vectors must be nonempty and equal length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - truth[i]);
    return sum / static_cast<double>(predicted.size());
}

struct ClassMetrics {
    int class_id = 0;
    ConfusionCounts counts;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f_measure = 0.0;
    double sensitivity = 0.0, specificity = 0.0;
};

struct MetricReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro;             // counts left zero; only the ratios are meaningful
    double overall_accuracy = 0.0;  // exact-match fraction
    double mae = 0.0;
};

inline ClassMetrics metrics_for(const ConfusionCounts& counts, int class_id) {
    ClassMetrics m;
    m.class_id = class_id;
    m.counts = counts;
    m.accuracy = accuracy(counts);
    m.precision = precision(counts);
    m.recall = recall(counts);
    m.f_measure = f_measure(counts);
    m.sensitivity = sensitivity(counts);
    m.specificity = specificity(counts);
    return m;
}

// Per-class one-vs-rest metrics, unweighted macro means, exact-match overall
// accuracy, and MAE over the supplied score pairs (class indices when no
// continuous annotation exists).
inline MetricReport macro_report(const std::vector<int>& predictions,
                                 const std::vector<int>& labels, int num_classes,
                                 const std::vector<double>& predicted_scores,
                                 const std::vector<double>& truth_scores) {
    if (num_classes < 1) throw DataError("macro_report: empty class set");
    MetricReport report;
    for (int c = 0; c < num_classes; ++c) {
        report.per_class.push_back(metrics_for(confusion(predictions, labels, c), c));
    }
    const double k = static_cast<double>(num_classes);
    for (const auto& m : report.per_class) {
        report.macro.accuracy += m.accuracy / k;
        report.macro.precision += m.precision / k;
        report.macro.recall += m.recall / k;
        report.macro.f_measure += m.f_measure / k;
        report.macro.sensitivity += m.sensitivity / k;
        report.macro.specificity += m.specificity / k;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++correct;
    }
    report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
    report.mae = mae(predicted_scores, truth_scores);
    return report;
}

}  // namespace mfeo::metrics

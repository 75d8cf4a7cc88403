#ifndef AUSCULT_METRICS_HPP
#define AUSCULT_METRICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace auscult {

struct ConfusionMatrix {
    uint64_t tp = 0, fn = 0, fp = 0, tn = 0;
    uint64_t total() const { return tp + fn + fp + tn; }
};

// Any rate whose denominator is zero stays unset and renders as NaN.
struct Rates {
    std::optional<double> acc;
    std::optional<double> balanced_acc; // mean of TPR and TNR
    std::optional<double> tpr;
    std::optional<double> tnr;
    std::optional<double> ppv;
    std::optional<double> npv;
    std::optional<double> f1_pos;
    std::optional<double> f1_neg;
    std::optional<double> mcc;
};

Rates compute_rates(const ConfusionMatrix& cm);

// Two-line aligned table: Acc, Acc-mu, TPR, TNR, PPV, NPV, F1+, F1-, MCC.
// Percentages carry two decimals, MCC three.
std::string format_rates_table(const Rates& r);

// Raw fractions; undefined rates serialize as null.
std::string rates_to_json(const Rates& r, const ConfusionMatrix& cm);

// Fragment scores per subject are averaged and thresholded; a mean exactly at
// the threshold classifies positive.  labels: subject id -> 1 (positive) / 0.
ConfusionMatrix aggregate_subjects(const std::vector<std::pair<std::string, double>>& fragment_scores,
                                   const std::map<std::string, int>& labels,
                                   double threshold = 0.5);

} // namespace auscult

#endif

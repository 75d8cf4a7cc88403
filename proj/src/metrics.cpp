#include "metrics.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "errors.hpp"

namespace auscult {

Rates compute_rates(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp), fn = static_cast<double>(cm.fn);
    const double fp = static_cast<double>(cm.fp), tn = static_cast<double>(cm.tn);
    Rates r;
    if (cm.total() > 0) r.acc = (tp + tn) / (tp + tn + fp + fn);
    if (cm.tp + cm.fn > 0) r.tpr = tp / (tp + fn);
    if (cm.tn + cm.fp > 0) r.tnr = tn / (tn + fp);
    if (cm.tp + cm.fp > 0) r.ppv = tp / (tp + fp);
    if (cm.tn + cm.fn > 0) r.npv = tn / (tn + fn);
    if (r.tpr && r.tnr) r.balanced_acc = 0.5 * (*r.tpr + *r.tnr);
    if (r.ppv && r.tpr && *r.ppv + *r.tpr > 0.0)
        r.f1_pos = 2.0 * *r.ppv * *r.tpr / (*r.ppv + *r.tpr);
    if (r.npv && r.tnr && *r.npv + *r.tnr > 0.0)
        r.f1_neg = 2.0 * *r.npv * *r.tnr / (*r.npv + *r.tnr);
    if (cm.tp + cm.fp > 0 && cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0 && cm.tn + cm.fn > 0) {
        const double denom = std::sqrt(tp + fp) * std::sqrt(tp + fn) * std::sqrt(tn + fp) *
                             std::sqrt(tn + fn);
        r.mcc = (tp * tn - fp * fn) / denom;
    }
    return r;
}

namespace {

std::string cell_percent(const std::optional<double>& v) {
    char buf[32];
    if (v)
        std::snprintf(buf, sizeof(buf), "%8.2f%%", *v * 100.0);
    else
        std::snprintf(buf, sizeof(buf), "%9s", "NaN");
    return buf;
}

std::string cell_plain(const std::optional<double>& v) {
    char buf[32];
    if (v)
        std::snprintf(buf, sizeof(buf), "%8.3f", *v);
    else
        std::snprintf(buf, sizeof(buf), "%8s", "NaN");
    return buf;
}

} // namespace

std::string format_rates_table(const Rates& r) {
    char header[256];
    std::snprintf(header, sizeof(header), "%9s%9s%9s%9s%9s%9s%9s%9s%8s", "Acc", "Acc-mu",
                  "TPR", "TNR", "PPV", "NPV", "F1+", "F1-", "MCC");
    std::string row;
    row += cell_percent(r.acc);
    row += cell_percent(r.balanced_acc);
    row += cell_percent(r.tpr);
    row += cell_percent(r.tnr);
    row += cell_percent(r.ppv);
    row += cell_percent(r.npv);
    row += cell_percent(r.f1_pos);
    row += cell_percent(r.f1_neg);
    row += cell_plain(r.mcc);
    return std::string(header) + "\n" + row + "\n";
}

std::string rates_to_json(const Rates& r, const ConfusionMatrix& cm) {
    nlohmann::json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
        else
            j[key] = nullptr;
    };
    put("acc", r.acc);
    put("balanced_acc", r.balanced_acc);
    put("tpr", r.tpr);
    put("tnr", r.tnr);
    put("ppv", r.ppv);
    put("npv", r.npv);
    put("f1_pos", r.f1_pos);
    put("f1_neg", r.f1_neg);
    put("mcc", r.mcc);
    j["counts"] = {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
    return j.dump(2) + "\n";
}

ConfusionMatrix aggregate_subjects(
    const std::vector<std::pair<std::string, double>>& fragment_scores,
    const std::map<std::string, int>& labels, double threshold) {
    std::map<std::string, std::pair<double, size_t>> sums;
    for (const auto& [id, score] : fragment_scores) {
        auto& [sum, n] = sums[id];
        sum += score;
        ++n;
    }
    ConfusionMatrix cm;
    for (const auto& [id, agg] : sums) {
        const auto it = labels.find(id);
        if (it == labels.end())
            fail(Errc::config, "metrics: no label for subject '" + id + "'");
        const double mean = agg.first / static_cast<double>(agg.second);
        const bool predicted_positive = mean >= threshold; // tie goes positive
        const bool actual_positive = it->second != 0;
        if (predicted_positive && actual_positive)
            ++cm.tp;
        else if (predicted_positive && !actual_positive)
            ++cm.fp;
        else if (!predicted_positive && actual_positive)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

} // namespace auscult

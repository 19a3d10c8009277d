#include "jitcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "jitcal/errors.hpp"

namespace jitcal {

double ece(const std::vector<Bin>& bins, std::size_t m) {
    if (m == 0) throw UndefinedInputError("ece undefined for zero predictions");
    double sum = 0.0;
    for (const auto& bin : bins) {
        if (bin.members == 0) continue;
        const double weight = static_cast<double>(bin.members) / static_cast<double>(m);
        sum += weight * std::abs(*bin.accuracy - *bin.confidence);
    }
    return sum;
}

double mce(const std::vector<Bin>& bins) {
    double best = -1.0;
    for (const auto& bin : bins) {
        if (bin.members == 0) continue;
        best = std::max(best, std::abs(*bin.accuracy - *bin.confidence));
    }
    if (best < 0.0) throw UndefinedInputError("mce undefined when every bin is empty");
    return best;
}

double brier(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw UndefinedInputError("brier undefined for empty input");
    double sum = 0.0;
    for (const auto& r : records) {
        const double d = r.prob - static_cast<double>(r.true_label);
        sum += d * d;
    }
    return sum / static_cast<double>(records.size());
}

std::vector<ReliabilityPoint> reliability_series(const std::vector<Bin>& bins) {
    std::vector<ReliabilityPoint> points;
    for (const auto& bin : bins) {
        if (bin.members == 0) continue;
        points.push_back({*bin.confidence, *bin.accuracy, bin.members});
    }
    return points;
}

double auc(const std::vector<PredictionRecord>& records) {
    std::size_t n_pos = 0;
    for (const auto& r : records)
        if (r.true_label == 1) ++n_pos;
    const std::size_t n_neg = records.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedInputError("auc needs at least one positive and one negative label");
    }

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].prob < records[b].prob;
    });

    // Mann-Whitney U from midranks of the positive class.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && records[order[j]].prob == records[order[i]].prob) ++j;
        const double midrank = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (records[order[k]].true_label == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AccuracyReport confusion(const std::vector<PredictionRecord>& records, double threshold) {
    if (records.empty()) throw UndefinedInputError("confusion undefined for empty input");
    AccuracyReport rep;
    for (const auto& r : records) {
        const bool pred_pos = r.prob >= threshold;
        if (pred_pos && r.true_label == 1) ++rep.tp;
        else if (pred_pos && r.true_label == 0) ++rep.fp;
        else if (!pred_pos && r.true_label == 0) ++rep.tn;
        else ++rep.fn;
    }
    const double m = static_cast<double>(records.size());
    rep.accuracy = static_cast<double>(rep.tp + rep.tn) / m;
    if (rep.tp + rep.fp > 0) {
        rep.precision = static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fp);
    }
    if (rep.tp + rep.fn > 0) {
        rep.recall = static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fn);
    }
    if (rep.precision && rep.recall && (*rep.precision + *rep.recall) > 0.0) {
        rep.f1 = 2.0 * *rep.precision * *rep.recall / (*rep.precision + *rep.recall);
    }
    try {
        rep.auc = auc(records);
    } catch (const UndefinedInputError&) {
        // single-class input: auc stays absent
    }
    return rep;
}

CalibrationReport calibration_report(const std::vector<PredictionRecord>& records,
                                     const BinningConfig& config) {
    CalibrationReport rep;
    rep.binning = config;
    rep.m = records.size();
    rep.bins = bin_statistics(records, config);
    rep.ece = ece(rep.bins, rep.m);
    rep.mce = mce(rep.bins);
    rep.brier = brier(records);
    return rep;
}

std::string reports_to_json(const std::vector<CalibrationReport>& reports,
                            const AccuracyReport& accuracy) {
    nlohmann::json doc;
    doc["reports"] = nlohmann::json::array();
    for (const auto& rep : reports) {
        nlohmann::json entry;
        entry["schema"] = schema_name(rep.binning.schema);
        entry["bins"] = rep.binning.count;
        entry["m"] = rep.m;
        entry["metric"] = {{"ece", rep.ece}, {"mce", rep.mce}, {"brier", rep.brier}};
        entry["bin_table"] = nlohmann::json::array();
        for (const auto& bin : rep.bins) {
            nlohmann::json row;
            row["bin"] = bin.index;
            row["lo"] = bin.lo;
            row["hi"] = bin.hi;
            row["members"] = bin.members;
            if (bin.confidence) row["confidence"] = *bin.confidence;
            if (bin.accuracy) row["accuracy"] = *bin.accuracy;
            entry["bin_table"].push_back(std::move(row));
        }
        doc["reports"].push_back(std::move(entry));
    }
    nlohmann::json acc;
    if (accuracy.auc) acc["auc"] = *accuracy.auc;
    if (accuracy.precision) acc["precision"] = *accuracy.precision;
    if (accuracy.recall) acc["recall"] = *accuracy.recall;
    if (accuracy.f1) acc["f1"] = *accuracy.f1;
    acc["accuracy"] = accuracy.accuracy;
    acc["tp"] = accuracy.tp;
    acc["fp"] = accuracy.fp;
    acc["tn"] = accuracy.tn;
    acc["fn"] = accuracy.fn;
    doc["accuracy"] = std::move(acc);
    return doc.dump(2);
}

} // namespace jitcal

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jitcal/binning.hpp"
#include "jitcal/dataset.hpp"

namespace jitcal {

struct CalibrationReport {
    double ece = 0.0;
    double mce = 0.0;
    double brier = 0.0;
    BinningConfig binning;
    std::vector<Bin> bins;
    std::size_t m = 0;
};

/// Threshold-based accuracy summary. Precision is absent when the model
/// predicts no positives (tp + fp = 0); recall likewise when there are no
/// positive instances; auc when only one class is present.
struct AccuracyReport {
    std::optional<double> auc;
    std::optional<double> precision;
    std::optional<double> recall;
    double accuracy = 0.0;
    std::optional<double> f1;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Weighted mean |accuracy - confidence| over nonempty bins; weights are
/// member counts over m, so empty bins contribute nothing.
double ece(const std::vector<Bin>& bins, std::size_t m);

/// Largest |accuracy - confidence| over nonempty bins.
double mce(const std::vector<Bin>& bins);

/// Mean squared error between prob and the 0/1 outcome; binning-free.
double brier(const std::vector<PredictionRecord>& records);

struct ReliabilityPoint {
    double confidence = 0.0;
    double accuracy = 0.0;
    std::size_t members = 0;
};

/// One (confidence, accuracy, members) point per nonempty bin, ordered by
/// interval; empty bins are omitted.
std::vector<ReliabilityPoint> reliability_series(const std::vector<Bin>& bins);

/// Rank-based AUC: probability that a random positive outranks a random
/// negative, ties counted as half. Exact under tied probabilities.
double auc(const std::vector<PredictionRecord>& records);

AccuracyReport confusion(const std::vector<PredictionRecord>& records,
                         double threshold = kDefaultThreshold);

CalibrationReport calibration_report(const std::vector<PredictionRecord>& records,
                                     const BinningConfig& config);

/// JSON document for a set of reports, one entry per binning config.
std::string reports_to_json(const std::vector<CalibrationReport>& reports,
                            const AccuracyReport& accuracy);

} // namespace jitcal

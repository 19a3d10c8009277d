#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jitcal/binning.hpp"
#include "jitcal/dataset.hpp"
#include "jitcal/predictor.hpp"
#include "jitcal/recalibration.hpp"
#include "jitcal/stats.hpp"

namespace jitcal {

enum class Phase { Validation, Test };

/// One (repetition, fold-or-test, binning config, method) measurement.
/// auc/precision/recall are absent on degenerate (single-class) folds.
struct MeasurementRecord {
    int repetition = 0;
    Phase phase = Phase::Validation;
    int fold = -1; // -1 encodes the test subset
    CalibrationMethod method = CalibrationMethod::None;
    BinningConfig binning;
    double ece = 0.0;
    double mce = 0.0;
    double brier = 0.0;
    std::optional<double> auc;
    std::optional<double> precision;
    std::optional<double> recall;
    std::string model_ref;
};

struct MeasurementTable {
    std::vector<MeasurementRecord> rows;
    std::vector<std::string> skipped; // flagged degenerate folds / rotations
    int k = 10;
    int repetitions = 10;
    std::optional<std::uint64_t> seed; // absent for tables read back from CSV
    CalibrationMethod method = CalibrationMethod::None;
    std::vector<BinningConfig> binnings;
};

std::vector<BinningConfig> default_binnings(); // {15,50} x {equiwidth,adaptive}

struct ProtocolConfig {
    LogRegConfig model;
    int k = 10;
    int repetitions = 10;
    std::uint64_t seed = 0;
    std::vector<BinningConfig> binnings = default_binnings();
    double threshold = kDefaultThreshold;
    bool stratified = false;
};

/// Fold roles for one RQ2 rotation: the calibration fold follows the
/// validation fold cyclically; the remaining k-2 folds train the model.
struct Rq2Roles {
    int validation = 0;
    int calibration = 0;
    std::vector<int> training;
};
Rq2Roles rq2_roles(int k, int validation_fold);

/// Repeated K-fold cross-validation without recalibration: per repetition,
/// train on k-1 folds, measure on the held-out fold, then let the best
/// validation-AUC model measure the test set. Rows per binning config:
/// repetitions * (k + 1).
MeasurementTable run_rq1(const std::vector<LabeledInstance>& train,
                         const std::vector<LabeledInstance>& test, const ProtocolConfig& config);

/// Same shape with a reserved calibration fold: train on k-2 folds, fit
/// the method on the calibration fold, measure the recalibrated
/// validation predictions; the best model plus its calibrator measures
/// the test set. Needs k >= 3.
MeasurementTable run_rq2(const std::vector<LabeledInstance>& train,
                         const std::vector<LabeledInstance>& test, const ProtocolConfig& config,
                         CalibrationMethod method);

/// External-model variants for predictions exported by models this
/// toolkit does not train: the prediction pool is folded in place of
/// retraining, calibrators are fitted on calibration-fold slices, and the
/// test export is measured as-is.
MeasurementTable run_rq1_external(const std::vector<PredictionRecord>& pool,
                                  const std::vector<PredictionRecord>& test,
                                  const ProtocolConfig& config);
MeasurementTable run_rq2_external(const std::vector<PredictionRecord>& pool,
                                  const std::vector<PredictionRecord>& test,
                                  const ProtocolConfig& config, CalibrationMethod method);

/// Before/after comparison of one metric under one binning config.
/// Averages and deltas are unrounded fractions; rendering rounds them.
struct ComparisonRow {
    std::string metric; // "ece" | "mce" | "brier"
    BinningConfig binning;
    double test_avg_before = 0.0;
    double test_avg_after = 0.0;
    double delta = 0.0;
    double val_min_before = 0.0, val_max_before = 0.0;
    double val_min_after = 0.0, val_max_after = 0.0;
    SignificanceResult significance_validation;
    SignificanceResult significance_test;
};

/// Pairs validation rows by (repetition, fold) and test rows by
/// repetition; runs the gated significance test on each pairing. The
/// tables must share seed, fold structure and binning configs.
std::vector<ComparisonRow> compare(const MeasurementTable& before, const MeasurementTable& after,
                                   std::uint64_t seed);

/// Fold whose model produced the repetition's test row, parsed from the
/// row's model_ref; -1 when the repetition has no test row.
int selected_fold(const MeasurementTable& table, int repetition);

void write_measurements_csv(std::ostream& out, const MeasurementTable& table);
MeasurementTable read_measurements_csv(std::istream& in);
MeasurementTable read_measurements_csv_file(const std::string& path);

} // namespace jitcal

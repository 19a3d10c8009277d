#pragma once

#include <string>
#include <variant>
#include <vector>

#include "jitcal/dataset.hpp"

namespace jitcal {

enum class CalibrationMethod { None, Platt, Temperature };

std::string method_name(CalibrationMethod method);
CalibrationMethod method_from_name(const std::string& name);

/// Logistic rescaling parameters: p = sigmoid(alpha * q + beta).
struct PlattParams {
    double alpha = 1.0;
    double beta = 0.0;
    bool converged = false;
    int iterations = 0;
    double final_nll = 0.0;
};

/// One-parameter special case: p = sigmoid(q / t), t > 0.
struct TemperatureParam {
    double t = 1.0;
    bool converged = false;
    int iterations = 0;
    double final_nll = 0.0;
};

/// Mean negative log likelihood of probabilities against 0/1 labels,
/// probabilities clamped to [1e-12, 1 - 1e-12].
double nll(const std::vector<double>& probs, const std::vector<int>& labels);

/// Minimizes the calibration-fold NLL of sigmoid(alpha*q + beta) by damped
/// Newton from (1, 0); stops when the gradient inf-norm drops below 1e-8
/// or after 200 iterations (converged = false). The calibration fold must
/// contain both classes and be disjoint from the training data (caller's
/// responsibility). When nll_trace is given it receives the NLL after
/// every accepted step, starting with the initial value.
PlattParams fit_platt(const std::vector<PredictionRecord>& calibration,
                      std::vector<double>* nll_trace = nullptr);

std::vector<PredictionRecord> apply_platt(const PlattParams& params,
                                          std::vector<PredictionRecord> records,
                                          double threshold = kDefaultThreshold);

/// Minimizes NLL of sigmoid(q / t) over ln t in [ln 0.01, ln 100] by
/// safeguarded scalar Newton from t = 1; stops when |dNLL/d ln t| < 1e-10
/// or after 100 iterations. Hitting a bound reports converged = false.
TemperatureParam fit_temperature(const std::vector<PredictionRecord>& calibration);

std::vector<PredictionRecord> apply_temperature(const TemperatureParam& param,
                                                std::vector<PredictionRecord> records,
                                                double threshold = kDefaultThreshold);

using Calibrator = std::variant<PlattParams, TemperatureParam>;

std::vector<PredictionRecord> apply_calibrator(const Calibrator& calibrator,
                                               std::vector<PredictionRecord> records,
                                               double threshold = kDefaultThreshold);

std::string calibrator_to_json(const Calibrator& calibrator);
Calibrator calibrator_from_json(const std::string& text);

} // namespace jitcal

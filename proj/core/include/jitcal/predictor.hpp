#pragma once

#include <string>
#include <vector>

#include "jitcal/dataset.hpp"

namespace jitcal {

struct FeatureScaling {
    double mean = 0.0;
    double stddev = 1.0;
};

/// L2-regularized logistic regression over standardized commit metrics.
/// The default feature set is just "la" (lines added).
struct LogRegModel {
    std::vector<std::string> feature_set;
    std::vector<double> weights; // aligned with feature_set
    double intercept = 0.0;
    std::vector<FeatureScaling> scaling; // aligned with feature_set

    double weight(const std::string& feature) const;
};

struct LogRegConfig {
    std::vector<std::string> feature_set{"la"};
    double l2 = 1.0;
    int max_iter = 100;
    double tol = 1e-8;
};

/// Damped-Newton fit of the L2-penalized log likelihood (the intercept is
/// not penalized). Features are standardized to zero mean / unit variance
/// with training statistics; deterministic for a fixed input order.
LogRegModel train_logreg(const std::vector<LabeledInstance>& train,
                         const LogRegConfig& config = {});

std::vector<PredictionRecord> predict(const LogRegModel& model,
                                      const std::vector<LabeledInstance>& instances,
                                      double threshold = kDefaultThreshold);

std::string model_to_json(const LogRegModel& model);
LogRegModel model_from_json(const std::string& text);

} // namespace jitcal

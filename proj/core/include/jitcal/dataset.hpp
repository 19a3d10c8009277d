#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace jitcal {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr double kProbEpsilon = 1e-12;

/// Numerically stable logistic function.
double sigmoid(double q);

/// ln(p / (1 - p)) with p clamped to [kProbEpsilon, 1 - kProbEpsilon].
double logit_of(double p);

/// One commit with its metric values and defect label (1 = defective).
/// The feature map always contains the "la" (lines added) metric.
struct LabeledInstance {
    std::string id;
    std::map<std::string, double> features;
    int label = 0;
};

/// One classifier output. `prob` is the probability of the defective
/// class; `logit` satisfies sigmoid(logit) == prob (reconstructed from
/// `prob` when a source file carries probabilities only).
struct PredictionRecord {
    std::string id;
    double logit = 0.0;
    double prob = 0.0;
    int pred_label = 0;
    int true_label = 0;
};

/// Deterministic assignment of instance indices to cross-validation folds.
struct FoldPlan {
    int k = 10;
    std::uint64_t seed = 0;
    std::vector<int> assignments; // instance index -> fold id in [0, k)

    std::vector<std::size_t> fold_indices(int fold) const;
    std::vector<std::size_t> complement_indices(int fold) const;
};

enum class PredictionFormat { Csv, JsonLines };

/// Reads a commit-metric CSV (header row; needs an "la" column and a
/// "bug" or "label" column; extra numeric columns are kept as features).
std::vector<LabeledInstance> load_commits(std::istream& in);
std::vector<LabeledInstance> load_commits_file(const std::string& path);

/// Reads prediction exports. Each row needs at least (prob, true_label);
/// a missing logit is reconstructed as logit_of(prob) and pred_label is
/// derived from the classification threshold (">= threshold" is class 1).
std::vector<PredictionRecord> load_predictions(std::istream& in, PredictionFormat format,
                                               double threshold = kDefaultThreshold);
std::vector<PredictionRecord> load_predictions_file(const std::string& path,
                                                    double threshold = kDefaultThreshold);

void save_predictions(std::ostream& out, const std::vector<PredictionRecord>& records,
                      PredictionFormat format);

void save_commits(std::ostream& out, const std::vector<LabeledInstance>& instances);

/// Shuffles 0..n-1 with a seeded Fisher-Yates pass and cuts the
/// permutation into k contiguous chunks whose sizes differ by at most 1.
FoldPlan split_folds(std::size_t n, int k, std::uint64_t seed);

/// Class-stratified variant: permutes each class separately and deals
/// members round-robin so every fold preserves the class ratio.
FoldPlan split_folds_stratified(const std::vector<int>& labels, int k, std::uint64_t seed);

} // namespace jitcal

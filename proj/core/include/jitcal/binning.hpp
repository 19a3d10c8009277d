#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jitcal/dataset.hpp"

namespace jitcal {

enum class BinningSchema { Equiwidth, Adaptive };

std::string schema_name(BinningSchema schema);
BinningSchema schema_from_name(const std::string& name);

struct BinningConfig {
    int count = 15;
    BinningSchema schema = BinningSchema::Equiwidth;

    bool operator==(const BinningConfig&) const = default;
};

/// One probability bin. Interval is (lo, hi], except bin 1 which also
/// includes p = 0. Accuracy (fraction of true-defective members) and
/// confidence (mean member probability) are absent for empty bins.
struct Bin {
    int index = 0; // 1-based
    double lo = 0.0;
    double hi = 0.0;
    std::size_t members = 0;
    std::optional<double> accuracy;
    std::optional<double> confidence;
};

/// B+1 bin edges over [0,1]. Equiwidth edges are k/B independent of the
/// data; adaptive edges are the k/B empirical quantiles of the sorted
/// probabilities (linear interpolation between order statistics) with the
/// outer edges forced to 0 and 1. Tied probabilities may duplicate edges.
std::vector<double> make_edges(const std::vector<PredictionRecord>& records,
                               const BinningConfig& config);

/// 1-based bin index per record: prob in (edge[b-1], edge[b]], with p = 0
/// assigned to bin 1. Duplicate edges yield empty degenerate bins.
std::vector<int> assign_bins(const std::vector<PredictionRecord>& records,
                             const std::vector<double>& edges);

std::vector<Bin> bin_statistics(const std::vector<PredictionRecord>& records,
                                const BinningConfig& config);

/// CSV table (bin, lo, hi, members, confidence, accuracy); empty bins
/// leave the confidence/accuracy cells blank.
void write_bin_table_csv(std::ostream& out, const std::vector<Bin>& bins);

} // namespace jitcal

#include "jitcal/binning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "jitcal/errors.hpp"
#include "internal/csv.hpp"

namespace jitcal {

std::string schema_name(BinningSchema schema) {
    return schema == BinningSchema::Equiwidth ? "equiwidth" : "adaptive";
}

BinningSchema schema_from_name(const std::string& name) {
    if (name == "equiwidth") return BinningSchema::Equiwidth;
    if (name == "adaptive") return BinningSchema::Adaptive;
    throw ConfigError("unknown binning schema '" + name + "'");
}

std::vector<double> make_edges(const std::vector<PredictionRecord>& records,
                               const BinningConfig& config) {
    const int b = config.count;
    if (b < 1) throw ConfigError("bin count must be >= 1, got " + std::to_string(b));

    std::vector<double> edges(static_cast<std::size_t>(b) + 1);
    if (config.schema == BinningSchema::Equiwidth) {
        for (int k = 0; k <= b; ++k) edges[k] = static_cast<double>(k) / b;
    } else {
        if (records.empty()) throw ConfigError("adaptive binning needs a nonempty prediction set");
        std::vector<double> probs(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) probs[i] = records[i].prob;
        std::sort(probs.begin(), probs.end());
        const std::size_t n = probs.size();
        for (int k = 1; k < b; ++k) {
            const double h = static_cast<double>(n - 1) * k / b;
            const std::size_t lo = static_cast<std::size_t>(std::floor(h));
            const double frac = h - static_cast<double>(lo);
            edges[k] = frac == 0.0 ? probs[lo] : probs[lo] + frac * (probs[lo + 1] - probs[lo]);
        }
        edges.front() = 0.0;
        edges.back() = 1.0;
        // forcing the outer edges must not break monotonicity
        for (int k = 1; k <= b; ++k) edges[k] = std::max(edges[k], edges[k - 1]);
    }
    return edges;
}

std::vector<int> assign_bins(const std::vector<PredictionRecord>& records,
                             const std::vector<double>& edges) {
    if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != 1.0 ||
        !std::is_sorted(edges.begin(), edges.end())) {
        throw ConfigError("bin edges must be nondecreasing from 0 to 1");
    }
    std::vector<int> assignment(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double p = records[i].prob;
        if (p == 0.0) {
            assignment[i] = 1;
            continue;
        }
        // smallest edge >= p; the preceding edge is < p (duplicates collapse
        // onto the lowest of the tied bins, leaving the others empty)
        const auto it = std::lower_bound(edges.begin() + 1, edges.end(), p);
        assignment[i] = static_cast<int>(it - edges.begin());
    }
    return assignment;
}

std::vector<Bin> bin_statistics(const std::vector<PredictionRecord>& records,
                                const BinningConfig& config) {
    if (records.empty()) throw ConfigError("bin_statistics needs a nonempty prediction set");
    const std::vector<double> edges = make_edges(records, config);
    const std::vector<int> assignment = assign_bins(records, edges);

    const int b = config.count;
    std::vector<std::size_t> members(static_cast<std::size_t>(b) + 1, 0);
    std::vector<std::size_t> positives(static_cast<std::size_t>(b) + 1, 0);
    std::vector<double> prob_sum(static_cast<std::size_t>(b) + 1, 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int bi = assignment[i];
        ++members[bi];
        if (records[i].true_label == 1) ++positives[bi];
        prob_sum[bi] += records[i].prob;
    }

    std::vector<Bin> bins(static_cast<std::size_t>(b));
    for (int k = 1; k <= b; ++k) {
        Bin& bin = bins[k - 1];
        bin.index = k;
        bin.lo = edges[k - 1];
        bin.hi = edges[k];
        bin.members = members[k];
        if (bin.members > 0) {
            bin.accuracy = static_cast<double>(positives[k]) / static_cast<double>(bin.members);
            bin.confidence = prob_sum[k] / static_cast<double>(bin.members);
        }
    }
    return bins;
}

void write_bin_table_csv(std::ostream& out, const std::vector<Bin>& bins) {
    out << "bin,lo,hi,members,confidence,accuracy\n";
    for (const auto& bin : bins) {
        out << bin.index << ',' << detail::fmt_double(bin.lo) << ',' << detail::fmt_double(bin.hi)
            << ',' << bin.members << ',';
        if (bin.confidence) out << detail::fmt_double(*bin.confidence);
        out << ',';
        if (bin.accuracy) out << detail::fmt_double(*bin.accuracy);
        out << '\n';
    }
}

} // namespace jitcal

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "jitcal/metrics.hpp"
#include "jitcal/protocol.hpp"

namespace jitcal {

/// Rounded percentage of a fraction, round-half-to-even. Rounding happens
/// only at this display layer; files carry full precision.
double round_percent(double fraction);
std::string format_percent(double fraction);

/// Direction marker comparing rounded percents:
/// "o" no change, "v"/"vv" decrease by at most / more than 10 points,
/// "^"/"^^" the increases.
std::string magnitude_marker(double before, double after);

struct ReliabilityCurve {
    std::string label;
    std::vector<ReliabilityPoint> points;
};

/// Reliability diagram: one polyline per curve over the nonempty-bin
/// points plus the identity diagonal. Output bytes are deterministic.
void write_reliability_svg(std::ostream& out, const std::vector<ReliabilityCurve>& curves,
                           const std::string& title);

/// The numbers behind the diagram: curve,point,confidence,accuracy,members.
void write_reliability_csv(std::ostream& out, const std::vector<ReliabilityCurve>& curves);

/// Bar chart of member counts per bin over the probability interval.
void write_bin_sizes_svg(std::ostream& out, const std::vector<Bin>& bins,
                         const std::string& title);

/// Plain-text table mirroring the Test_Avg / Val. Min-Max / Stat. Sign.
/// row structure, one column per metric-and-binning combination.
std::string render_comparison_table(const std::vector<ComparisonRow>& rows,
                                    const std::string& before_label,
                                    const std::string& after_label);

std::string comparison_to_json(const std::vector<ComparisonRow>& rows);

} // namespace jitcal

#include "jitcal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "internal/csv.hpp"

namespace jitcal {

namespace {

// fixed two-decimal coordinates keep SVG bytes stable across runs
std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 56.0;

double map_x(double v) { return kMargin + v * (kWidth - 2.0 * kMargin); }
double map_y(double v) { return kHeight - kMargin - v * (kHeight - 2.0 * kMargin); }

const char* curve_color(std::size_t i) {
    static const char* palette[] = {"#3e98b3", "#29a666", "#e08214", "#a6294c", "#7b3294"};
    return palette[i % 5];
}

void svg_header(std::ostream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << coord(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
}

void svg_axes(std::ostream& out, const std::string& xlabel, const std::string& ylabel) {
    out << "<rect x=\"" << coord(kMargin) << "\" y=\"" << coord(kMargin) << "\" width=\""
        << coord(kWidth - 2 * kMargin) << "\" height=\"" << coord(kHeight - 2 * kMargin)
        << "\" fill=\"none\" stroke=\"#27272b\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = t / 4.0;
        out << "<text x=\"" << coord(map_x(v)) << "\" y=\"" << coord(kHeight - kMargin + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << coord(v) << "</text>\n";
        out << "<text x=\"" << coord(kMargin - 8) << "\" y=\"" << coord(map_y(v) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << coord(v)
            << "</text>\n";
    }
    out << "<text x=\"" << coord(kWidth / 2) << "\" y=\"" << coord(kHeight - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << coord(kHeight / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << coord(kHeight / 2) << ")\">" << ylabel << "</text>\n";
}

} // namespace

double round_percent(double fraction) {
    const double x = fraction * 100.0;
    const double f = std::floor(x);
    const double frac = x - f;
    if (frac > 0.5) return f + 1.0;
    if (frac < 0.5) return f;
    return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", round_percent(fraction));
    return buf;
}

std::string magnitude_marker(double before, double after) {
    const double diff = round_percent(after) - round_percent(before);
    if (diff == 0.0) return "o";
    if (diff > 10.0) return "^^";
    if (diff > 0.0) return "^";
    if (diff < -10.0) return "vv";
    return "v";
}

void write_reliability_svg(std::ostream& out, const std::vector<ReliabilityCurve>& curves,
                           const std::string& title) {
    svg_header(out, title);
    svg_axes(out, "Confidence", "Accuracy");

    // identity diagonal: the perfectly calibrated reference
    out << "<line x1=\"" << coord(map_x(0)) << "\" y1=\"" << coord(map_y(0)) << "\" x2=\""
        << coord(map_x(1)) << "\" y2=\"" << coord(map_y(1))
        << "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n";

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& curve = curves[c];
        const char* color = curve_color(c);
        if (!curve.points.empty()) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (const auto& pt : curve.points) {
                out << coord(map_x(pt.confidence)) << ',' << coord(map_y(pt.accuracy)) << ' ';
            }
            out << "\"/>\n";
            for (const auto& pt : curve.points) {
                out << "<circle cx=\"" << coord(map_x(pt.confidence)) << "\" cy=\""
                    << coord(map_y(pt.accuracy)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
        }
        const double ly = kMargin + 16.0 + 16.0 * static_cast<double>(c);
        out << "<line x1=\"" << coord(kMargin + 10) << "\" y1=\"" << coord(ly) << "\" x2=\""
            << coord(kMargin + 34) << "\" y2=\"" << coord(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << coord(kMargin + 40) << "\" y=\"" << coord(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << curve.label << "</text>\n";
    }
    out << "</svg>\n";
}

void write_reliability_csv(std::ostream& out, const std::vector<ReliabilityCurve>& curves) {
    out << "curve,point,confidence,accuracy,members\n";
    for (const auto& curve : curves) {
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const auto& pt = curve.points[i];
            out << detail::csv_escape(curve.label) << ',' << i + 1 << ','
                << detail::fmt_double(pt.confidence) << ',' << detail::fmt_double(pt.accuracy)
                << ',' << pt.members << '\n';
        }
    }
}

void write_bin_sizes_svg(std::ostream& out, const std::vector<Bin>& bins,
                         const std::string& title) {
    svg_header(out, title);
    svg_axes(out, "Prediction probability", "Share of predictions");

    std::size_t total = 0;
    for (const auto& bin : bins) total += bin.members;
    if (total == 0) total = 1;

    for (const auto& bin : bins) {
        const double share = static_cast<double>(bin.members) / static_cast<double>(total);
        const double x0 = map_x(bin.lo);
        const double x1 = map_x(bin.hi);
        const double y = map_y(share);
        if (x1 - x0 <= 0.0) continue; // degenerate adaptive bin
        out << "<rect x=\"" << coord(x0) << "\" y=\"" << coord(y) << "\" width=\""
            << coord(x1 - x0) << "\" height=\"" << coord(map_y(0) - y)
            << "\" fill=\"#3e98b3\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    out << "</svg>\n";
}

namespace {

std::string config_label(const std::string& metric, const BinningConfig& cfg) {
    if (metric == "brier") return "Brier%";
    const std::string schema = cfg.schema == BinningSchema::Equiwidth ? "eq" : "ad";
    std::string name = metric;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return name + "% " + schema + std::to_string(cfg.count);
}

std::string minmax(double lo, double hi) {
    return format_percent(lo) + "-" + format_percent(hi);
}

// display order: all ECE columns, all MCE columns, then Brier
std::vector<const ComparisonRow*> display_order(const std::vector<ComparisonRow>& rows) {
    std::vector<const ComparisonRow*> out;
    for (const auto& metric : {"ece", "mce", "brier"}) {
        for (const auto& row : rows) {
            if (row.metric == metric) out.push_back(&row);
        }
    }
    return out;
}

} // namespace

std::string render_comparison_table(const std::vector<ComparisonRow>& rows,
                                    const std::string& before_label,
                                    const std::string& after_label) {
    const std::vector<const ComparisonRow*> cols = display_order(rows);

    std::vector<std::string> labels;
    std::vector<std::vector<std::string>> body;
    labels.push_back("Data subset");
    body.push_back({});
    for (const auto* row : cols) body.back().push_back(config_label(row->metric, row->binning));

    const auto add_row = [&](const std::string& label,
                             const std::function<std::string(const ComparisonRow&)>& cell) {
        labels.push_back(label);
        body.push_back({});
        for (const auto* row : cols) body.back().push_back(cell(*row));
    };

    add_row("Test_Avg (" + before_label + ")",
            [](const ComparisonRow& r) { return format_percent(r.test_avg_before); });
    add_row("Val. Min-Max (" + before_label + ")",
            [](const ComparisonRow& r) { return minmax(r.val_min_before, r.val_max_before); });
    add_row("Test_Avg (" + after_label + ")", [](const ComparisonRow& r) {
        return format_percent(r.test_avg_after) + " " +
               magnitude_marker(r.test_avg_before, r.test_avg_after);
    });
    add_row("Val. Min-Max (" + after_label + ")",
            [](const ComparisonRow& r) { return minmax(r.val_min_after, r.val_max_after); });
    const std::string sign_label = before_label + "-" + after_label;
    add_row("Stat. Sign. val (" + sign_label + ")", [](const ComparisonRow& r) {
        return r.significance_validation.significant ? "Yes" : "No";
    });
    add_row("Stat. Sign. test (" + sign_label + ")", [](const ComparisonRow& r) {
        return r.significance_test.significant ? "Yes" : "No";
    });

    std::size_t label_width = 0;
    for (const auto& l : labels) label_width = std::max(label_width, l.size());
    std::vector<std::size_t> widths(cols.size(), 0);
    for (const auto& row : body) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }

    std::ostringstream out;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        out << labels[r] << std::string(label_width - labels[r].size(), ' ');
        for (std::size_t c = 0; c < body[r].size(); ++c) {
            out << " | " << body[r][c] << std::string(widths[c] - body[r][c].size(), ' ');
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = label_width;
            for (std::size_t w : widths) total += w + 3;
            out << std::string(total, '-') << '\n';
        }
    }
    return out.str();
}

std::string comparison_to_json(const std::vector<ComparisonRow>& rows) {
    nlohmann::json doc = nlohmann::json::array();
    const auto sig = [](const SignificanceResult& s) {
        return nlohmann::json{{"metric", s.metric_name},
                              {"n", s.n},
                              {"normality_test", normality_test_name(s.normality_test)},
                              {"normality_p", s.normality_p},
                              {"chosen_test", paired_test_name(s.chosen_test)},
                              {"statistic", s.statistic},
                              {"p_value", s.p_value},
                              {"significant", s.significant},
                              {"degenerate", s.degenerate}};
    };
    for (const auto& row : rows) {
        nlohmann::json entry;
        entry["metric"] = row.metric;
        entry["schema"] = schema_name(row.binning.schema);
        entry["bins"] = row.binning.count;
        entry["test_avg_before"] = row.test_avg_before;
        entry["test_avg_after"] = row.test_avg_after;
        entry["delta"] = row.delta;
        entry["val_min_before"] = row.val_min_before;
        entry["val_max_before"] = row.val_max_before;
        entry["val_min_after"] = row.val_min_after;
        entry["val_max_after"] = row.val_max_after;
        entry["significance_validation"] = sig(row.significance_validation);
        entry["significance_test"] = sig(row.significance_test);
        doc.push_back(std::move(entry));
    }
    return doc.dump(2);
}

} // namespace jitcal

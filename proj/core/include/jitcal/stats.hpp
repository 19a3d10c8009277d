#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jitcal {

enum class NormalityTest { DagostinoPearson, MonteCarlo };
enum class PairedTest { PairedT, Wilcoxon };

/// Outcome of one paired before/after comparison: the normality decision
/// on the paired differences, the test it routed to, and the verdict at
/// the 0.05 level. `degenerate` flags samples no test could handle
/// (constant differences, too few pairs); those report p = 1.
struct SignificanceResult {
    std::string metric_name;
    std::size_t n = 0;
    NormalityTest normality_test = NormalityTest::MonteCarlo;
    double normality_p = 1.0;
    PairedTest chosen_test = PairedTest::Wilcoxon;
    double statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;
    bool degenerate = false;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// D'Agostino & Pearson omnibus normality test: K2 = Z1(skew)^2 +
/// Z2(kurtosis)^2 against chi-square with 2 degrees of freedom.
/// Needs n >= 20 and positive variance.
double dagostino_pearson(const std::vector<double>& sample);

/// Small-sample normality check: Anderson-Darling distance to the normal
/// fitted to the sample, with the null distribution built by drawing
/// n_resamples same-size samples from that normal under `seed`.
/// p = (1 + #{resampled >= observed}) / (n_resamples + 1). Needs n >= 3.
double monte_carlo_normality(const std::vector<double>& sample, std::uint64_t seed,
                             int n_resamples = 9999);

/// Anderson-Darling statistic against a normal with the sample's own
/// mean and standard deviation (ddof = 1).
double anderson_darling_statistic(const std::vector<double>& sample);

/// Two-sided paired t-test on the differences a - b.
TestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided Wilcoxon signed-rank test on a - b. Zero differences are
/// dropped (Wilcoxon's rule), tied magnitudes get midranks. Exact
/// enumeration up to 25 effective pairs, tie- and continuity-corrected
/// normal approximation beyond. The statistic is W+ (sum of positive
/// ranks). All-zero differences return p = 1.
TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

/// Normality-gated paired comparison: Monte Carlo normality when fewer
/// than 50 pairs, D'Agostino-Pearson otherwise; paired t if normality is
/// not rejected at 0.05, Wilcoxon otherwise. Degenerate samples come back
/// flagged and non-significant rather than as exceptions.
SignificanceResult significance(const std::vector<double>& before,
                                const std::vector<double>& after, std::uint64_t seed,
                                const std::string& metric_name = {});

std::string significance_to_json(const SignificanceResult& result);

std::string normality_test_name(NormalityTest test);
std::string paired_test_name(PairedTest test);

} // namespace jitcal

#include "jitcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "jitcal/errors.hpp"
#include "jitcal/rng.hpp"

namespace jitcal {

namespace {

double mean_of(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// central sample moment of given order, biased (divide by n)
double central_moment(const std::vector<double>& x, double mean, int order) {
    double sum = 0.0;
    for (double v : x) sum += std::pow(v - mean, order);
    return sum / static_cast<double>(x.size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// D'Agostino (1970) transform of the sample skewness to a standard normal.
double skewness_z(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double mean = mean_of(x);
    const double m2 = central_moment(x, mean, 2);
    const double m3 = central_moment(x, mean, 3);
    const double g1 = m3 / std::pow(m2, 1.5);

    double y = g1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
    const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                         ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    const double alpha = std::sqrt(2.0 / (w2 - 1.0));
    if (y == 0.0) y = 1.0; // limiting value, matches the reference transform
    const double t = y / alpha;
    return delta * std::log(t + std::sqrt(t * t + 1.0));
}

// Anscombe & Glynn (1983) transform of the sample kurtosis.
double kurtosis_z(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double mean = mean_of(x);
    const double m2 = central_moment(x, mean, 2);
    const double m4 = central_moment(x, mean, 4);
    const double b2 = m4 / (m2 * m2);

    const double e = 3.0 * (n - 1.0) / (n + 1.0);
    const double var = 24.0 * n * (n - 2.0) * (n - 3.0) /
                       ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    const double xstat = (b2 - e) / std::sqrt(var);
    const double sqrtbeta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                             std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
    const double a = 6.0 + 8.0 / sqrtbeta1 *
                               (2.0 / sqrtbeta1 + std::sqrt(1.0 + 4.0 / (sqrtbeta1 * sqrtbeta1)));
    const double term1 = 1.0 - 2.0 / (9.0 * a);
    const double denom = 1.0 + xstat * std::sqrt(2.0 / (a - 4.0));
    if (denom == 0.0) throw DegenerateSampleError("kurtosis transform denominator is zero");
    const double term2 =
        std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
    return (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
}

double sample_variance(const std::vector<double>& x) {
    const double mean = mean_of(x);
    double sum = 0.0;
    for (double v : x) sum += (v - mean) * (v - mean);
    return x.size() > 1 ? sum / static_cast<double>(x.size() - 1) : 0.0;
}

} // namespace

double dagostino_pearson(const std::vector<double>& sample) {
    if (sample.size() < 20) {
        throw ApplicabilityError("D'Agostino-Pearson needs n >= 20, got " +
                                 std::to_string(sample.size()));
    }
    if (sample_variance(sample) <= 0.0) {
        throw DegenerateSampleError("D'Agostino-Pearson needs positive variance");
    }
    const double z1 = skewness_z(sample);
    const double z2 = kurtosis_z(sample);
    const double k2 = z1 * z1 + z2 * z2;
    return std::exp(-0.5 * k2); // chi-square survival, 2 degrees of freedom
}

double anderson_darling_statistic(const std::vector<double>& sample) {
    const std::size_t n = sample.size();
    const double mean = mean_of(sample);
    const double sd = std::sqrt(sample_variance(sample));
    if (!(sd > 0.0)) throw DegenerateSampleError("Anderson-Darling needs positive variance");

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (sample[i] - mean) / sd;
    std::sort(z.begin(), z.end());

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = std::clamp(normal_cdf(z[i]), 1e-300, 1.0);
        const double hi = std::clamp(1.0 - normal_cdf(z[n - 1 - i]), 1e-300, 1.0);
        sum += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
    }
    const double dn = static_cast<double>(n);
    return -dn - sum / dn;
}

double monte_carlo_normality(const std::vector<double>& sample, std::uint64_t seed,
                             int n_resamples) {
    const std::size_t n = sample.size();
    if (n < 3) {
        throw ApplicabilityError("Monte Carlo normality needs n >= 3, got " + std::to_string(n));
    }
    const double sd = std::sqrt(sample_variance(sample));
    if (!(sd > 0.0)) throw DegenerateSampleError("Monte Carlo normality needs positive variance");
    const double mean = mean_of(sample);

    const double observed = anderson_darling_statistic(sample);
    Rng rng(seed);
    std::vector<double> resample(n);
    std::size_t at_least = 0;
    for (int r = 0; r < n_resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i) resample[i] = rng.normal(mean, sd);
        if (anderson_darling_statistic(resample) >= observed) ++at_least;
    }
    return static_cast<double>(1 + at_least) / static_cast<double>(n_resamples + 1);
}

TestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw UndefinedInputError("paired t-test needs equal-length samples with n >= 2");
    }
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mean = mean_of(d);
    const double sd = std::sqrt(sample_variance(d));
    if (!(sd > 0.0)) {
        throw DegenerateSampleError("paired t-test: differences have zero variance");
    }
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {t, std::min(p, 1.0)};
}

TestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw UndefinedInputError("Wilcoxon test needs equal-length samples");
    }
    std::vector<double> d;
    d.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (diff != 0.0) d.push_back(diff);
    }
    if (d.empty()) return {0.0, 1.0}; // all differences zero

    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

    // doubled midranks stay integral, which keeps the exact distribution
    // an integer-indexed table
    std::vector<long long> doubled_rank(n);
    std::vector<std::size_t> tie_sizes;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
        const long long dr = static_cast<long long>(i + 1 + j); // 2 * midrank
        for (std::size_t k = i; k < j; ++k) doubled_rank[order[k]] = dr;
        tie_sizes.push_back(j - i);
        i = j;
    }

    long long w_plus2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (d[k] > 0.0) w_plus2 += doubled_rank[k];
    }
    const double w_plus = static_cast<double>(w_plus2) / 2.0;

    double p;
    if (n <= 25) {
        // exact null distribution of 2*W+ over all 2^n sign assignments
        const long long total2 = static_cast<long long>(n) * (static_cast<long long>(n) + 1);
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        long long reach = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const long long r = doubled_rank[k];
            for (long long s = reach; s >= 0; --s) {
                if (count[s] > 0.0) count[s + r] += count[s];
            }
            reach += r;
        }
        const double denom = std::ldexp(1.0, static_cast<int>(n)); // 2^n
        double below = 0.0, above = 0.0;
        for (long long s = 0; s <= total2; ++s) {
            if (s <= w_plus2) below += count[s];
            if (s >= w_plus2) above += count[s];
        }
        p = std::min(1.0, 2.0 * std::min(below, above) / denom);
    } else {
        const double dn = static_cast<double>(n);
        const double mean = dn * (dn + 1.0) / 4.0;
        double tie_term = 0.0;
        for (std::size_t t : tie_sizes) {
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
        const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
        if (!(var > 0.0)) return {w_plus, 1.0};
        double dev = w_plus - mean;
        // continuity correction pulls the statistic half a step toward the mean
        if (dev > 0.5) dev -= 0.5;
        else if (dev < -0.5) dev += 0.5;
        else dev = 0.0;
        const double z = dev / std::sqrt(var);
        p = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
    }
    return {w_plus, p};
}

SignificanceResult significance(const std::vector<double>& before,
                                const std::vector<double>& after, std::uint64_t seed,
                                const std::string& metric_name) {
    if (before.size() != after.size()) {
        throw UndefinedInputError("significance needs equal-length paired samples");
    }
    SignificanceResult result;
    result.metric_name = metric_name;
    result.n = before.size();

    std::vector<double> d(before.size());
    for (std::size_t i = 0; i < before.size(); ++i) d[i] = before[i] - after[i];

    const auto degenerate = [&]() {
        result.degenerate = true;
        result.p_value = 1.0;
        result.significant = false;
        return result;
    };

    if (result.n < 3) return degenerate();
    if (!(sample_variance(d) > 0.0)) return degenerate();

    if (result.n < 50) {
        result.normality_test = NormalityTest::MonteCarlo;
        result.normality_p = monte_carlo_normality(d, seed);
    } else {
        result.normality_test = NormalityTest::DagostinoPearson;
        result.normality_p = dagostino_pearson(d);
    }

    try {
        if (result.normality_p >= 0.05) {
            result.chosen_test = PairedTest::PairedT;
            const TestResult t = paired_t_test(before, after);
            result.statistic = t.statistic;
            result.p_value = t.p_value;
        } else {
            result.chosen_test = PairedTest::Wilcoxon;
            const TestResult w = wilcoxon_signed_rank(before, after);
            result.statistic = w.statistic;
            result.p_value = w.p_value;
        }
    } catch (const DegenerateSampleError&) {
        return degenerate();
    }
    result.significant = result.p_value < 0.05;
    return result;
}

std::string normality_test_name(NormalityTest test) {
    return test == NormalityTest::DagostinoPearson ? "dagostino_pearson" : "monte_carlo";
}

std::string paired_test_name(PairedTest test) {
    return test == PairedTest::PairedT ? "paired_t" : "wilcoxon";
}

std::string significance_to_json(const SignificanceResult& result) {
    nlohmann::json doc;
    doc["metric"] = result.metric_name;
    doc["n"] = result.n;
    doc["normality_test"] = normality_test_name(result.normality_test);
    doc["normality_p"] = result.normality_p;
    doc["chosen_test"] = paired_test_name(result.chosen_test);
    doc["statistic"] = result.statistic;
    doc["p_value"] = result.p_value;
    doc["significant"] = result.significant;
    doc["degenerate"] = result.degenerate;
    return doc.dump(2);
}

} // namespace jitcal

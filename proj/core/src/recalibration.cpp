#include "jitcal/recalibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "jitcal/errors.hpp"

namespace jitcal {

namespace {

// ln(1 + e^z), overflow-safe.
double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Mean NLL of sigmoid(z_i) against labels, computed from the logits
// directly so saturated probabilities lose no accuracy.
double mean_nll_from_logits(const std::vector<double>& z, const std::vector<int>& labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        sum += softplus(z[i]) - static_cast<double>(labels[i]) * z[i];
    }
    return sum / static_cast<double>(z.size());
}

void require_both_classes(const std::vector<PredictionRecord>& records, const char* what) {
    bool has_pos = false, has_neg = false;
    for (const auto& r : records) {
        if (r.true_label == 1) has_pos = true;
        else has_neg = true;
    }
    if (records.empty() || !has_pos || !has_neg) {
        throw FitError(std::string(what) + ": calibration fold must contain both classes");
    }
}

} // namespace

std::string method_name(CalibrationMethod method) {
    switch (method) {
    case CalibrationMethod::None: return "none";
    case CalibrationMethod::Platt: return "platt";
    case CalibrationMethod::Temperature: return "temperature";
    }
    return "none";
}

CalibrationMethod method_from_name(const std::string& name) {
    if (name == "none") return CalibrationMethod::None;
    if (name == "platt") return CalibrationMethod::Platt;
    if (name == "temperature") return CalibrationMethod::Temperature;
    throw ConfigError("unknown calibration method '" + name + "'");
}

double nll(const std::vector<double>& probs, const std::vector<int>& labels) {
    if (probs.empty() || probs.size() != labels.size()) {
        throw UndefinedInputError("nll needs equal-length nonempty sequences");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kProbEpsilon, 1.0 - kProbEpsilon);
        sum += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return sum / static_cast<double>(probs.size());
}

PlattParams fit_platt(const std::vector<PredictionRecord>& calibration,
                      std::vector<double>* nll_trace) {
    require_both_classes(calibration, "fit_platt");

    const std::size_t m = calibration.size();
    std::vector<double> q(m);
    std::vector<int> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        q[i] = calibration[i].logit;
        y[i] = calibration[i].true_label;
    }

    const auto objective = [&](double alpha, double beta) {
        std::vector<double> z(m);
        for (std::size_t i = 0; i < m; ++i) z[i] = alpha * q[i] + beta;
        return mean_nll_from_logits(z, y);
    };

    PlattParams params;
    double cur = objective(params.alpha, params.beta);
    if (nll_trace) nll_trace->push_back(cur);

    constexpr int kMaxIter = 200;
    constexpr double kGradTol = 1e-8;
    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        double ga = 0.0, gb = 0.0;
        double haa = 0.0, hab = 0.0, hbb = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = sigmoid(params.alpha * q[i] + params.beta);
            const double r = s - static_cast<double>(y[i]);
            const double w = s * (1.0 - s);
            ga += r * q[i];
            gb += r;
            haa += w * q[i] * q[i];
            hab += w * q[i];
            hbb += w;
        }
        const double inv_m = 1.0 / static_cast<double>(m);
        ga *= inv_m;
        gb *= inv_m;
        haa *= inv_m;
        hab *= inv_m;
        hbb *= inv_m;

        if (std::max(std::abs(ga), std::abs(gb)) < kGradTol) {
            params.converged = true;
            break;
        }

        double det = haa * hbb - hab * hab;
        if (det <= 1e-300) {
            // near-singular curvature (fully saturated fold): regularize
            const double ridge = 1e-10 * (haa + hbb + 1.0);
            haa += ridge;
            hbb += ridge;
            det = haa * hbb - hab * hab;
        }
        const double da = (hbb * ga - hab * gb) / det;
        const double db = (haa * gb - hab * ga) / det;

        double step = 1.0;
        double next = cur;
        while (step > 1e-14) {
            next = objective(params.alpha - step * da, params.beta - step * db);
            if (next < cur) break;
            step /= 2.0;
        }
        if (next >= cur) break; // no descent direction left
        params.alpha -= step * da;
        params.beta -= step * db;
        cur = next;
        if (nll_trace) nll_trace->push_back(cur);
    }
    params.iterations = iter;
    params.final_nll = cur;
    if (!std::isfinite(params.alpha) || !std::isfinite(params.beta)) {
        throw FitError("fit_platt produced non-finite parameters");
    }
    return params;
}

std::vector<PredictionRecord> apply_platt(const PlattParams& params,
                                          std::vector<PredictionRecord> records,
                                          double threshold) {
    for (auto& r : records) {
        r.logit = params.alpha * r.logit + params.beta;
        r.prob = sigmoid(r.logit);
        r.pred_label = r.prob >= threshold ? 1 : 0;
    }
    return records;
}

TemperatureParam fit_temperature(const std::vector<PredictionRecord>& calibration) {
    require_both_classes(calibration, "fit_temperature");

    const std::size_t m = calibration.size();
    std::vector<double> q(m);
    std::vector<int> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        q[i] = calibration[i].logit;
        y[i] = calibration[i].true_label;
    }

    const auto value = [&](double u) {
        const double scale = std::exp(-u);
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double z = q[i] * scale;
            sum += softplus(z) - static_cast<double>(y[i]) * z;
        }
        return sum / static_cast<double>(m);
    };
    // derivatives of the mean NLL with respect to u = ln t
    const auto derivatives = [&](double u, double& g1, double& g2) {
        const double scale = std::exp(-u);
        g1 = 0.0;
        g2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double z = q[i] * scale;
            const double s = sigmoid(z);
            const double r = s - static_cast<double>(y[i]);
            g1 -= r * z;
            g2 += s * (1.0 - s) * z * z + r * z;
        }
        g1 /= static_cast<double>(m);
        g2 /= static_cast<double>(m);
    };

    const double lo = std::log(1e-2);
    const double hi = std::log(1e2);
    constexpr double kTol = 1e-10;
    constexpr int kMaxIter = 100;

    TemperatureParam param;
    double g_lo, g_hi, unused;
    derivatives(lo, g_lo, unused);
    derivatives(hi, g_hi, unused);

    if (g_lo >= 0.0 || g_hi <= 0.0) {
        // gradient does not change sign: minimum sits at a bound
        const double u = value(lo) <= value(hi) ? lo : hi;
        param.t = std::exp(u);
        param.converged = false;
        param.iterations = 0;
        param.final_nll = value(u);
        return param;
    }

    double a = lo, b = hi;
    double u = 0.0; // t = 1
    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        double g1, g2;
        derivatives(u, g1, g2);
        if (std::abs(g1) < kTol) {
            param.converged = true;
            break;
        }
        if (g1 > 0.0) b = u;
        else a = u;

        double next;
        if (g2 > 0.0) {
            next = u - g1 / g2;
            if (!(next > a && next < b)) next = 0.5 * (a + b);
        } else {
            next = 0.5 * (a + b);
        }
        u = next;
    }
    param.t = std::exp(u);
    param.iterations = iter;
    param.final_nll = value(u);
    return param;
}

std::vector<PredictionRecord> apply_temperature(const TemperatureParam& param,
                                                std::vector<PredictionRecord> records,
                                                double threshold) {
    if (!(param.t > 0.0) || !std::isfinite(param.t)) {
        throw ValidationError("temperature must be positive and finite");
    }
    for (auto& r : records) {
        r.logit = r.logit / param.t;
        r.prob = sigmoid(r.logit);
        r.pred_label = r.prob >= threshold ? 1 : 0;
    }
    return records;
}

std::vector<PredictionRecord> apply_calibrator(const Calibrator& calibrator,
                                               std::vector<PredictionRecord> records,
                                               double threshold) {
    if (std::holds_alternative<PlattParams>(calibrator)) {
        return apply_platt(std::get<PlattParams>(calibrator), std::move(records), threshold);
    }
    return apply_temperature(std::get<TemperatureParam>(calibrator), std::move(records),
                             threshold);
}

std::string calibrator_to_json(const Calibrator& calibrator) {
    nlohmann::json doc;
    if (std::holds_alternative<PlattParams>(calibrator)) {
        const auto& p = std::get<PlattParams>(calibrator);
        doc["method"] = "platt";
        doc["alpha"] = p.alpha;
        doc["beta"] = p.beta;
        doc["final_nll"] = p.final_nll;
        doc["converged"] = p.converged;
    } else {
        const auto& p = std::get<TemperatureParam>(calibrator);
        doc["method"] = "temperature";
        doc["t"] = p.t;
        doc["final_nll"] = p.final_nll;
        doc["converged"] = p.converged;
    }
    return doc.dump(2);
}

Calibrator calibrator_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid calibrator JSON: ") + e.what());
    }
    const std::string method = doc.value("method", std::string());
    if (method == "platt") {
        PlattParams p;
        p.alpha = doc.at("alpha").get<double>();
        p.beta = doc.at("beta").get<double>();
        p.final_nll = doc.value("final_nll", 0.0);
        p.converged = doc.value("converged", false);
        return p;
    }
    if (method == "temperature") {
        TemperatureParam p;
        p.t = doc.at("t").get<double>();
        p.final_nll = doc.value("final_nll", 0.0);
        p.converged = doc.value("converged", false);
        if (!(p.t > 0.0)) throw ValidationError("temperature must be positive");
        return p;
    }
    throw ParseError("calibrator JSON must carry method 'platt' or 'temperature'");
}

} // namespace jitcal

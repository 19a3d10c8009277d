#include "jitcal/predictor.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "jitcal/errors.hpp"

namespace jitcal {

namespace {

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Solves A x = b for a small symmetric positive definite A (row-major,
// d x d) by Cholesky. Falls back to a ridged retry if a pivot collapses.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t d) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<double> l(a);
        bool ok = true;
        for (std::size_t i = 0; i < d && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = l[i * d + j];
                for (std::size_t k = 0; k < j; ++k) sum -= l[i * d + k] * l[j * d + k];
                if (i == j) {
                    if (sum <= 0.0) {
                        ok = false;
                        break;
                    }
                    l[i * d + i] = std::sqrt(sum);
                } else {
                    l[i * d + j] = sum / l[j * d + j];
                }
            }
        }
        if (!ok) {
            double trace = 0.0;
            for (std::size_t i = 0; i < d; ++i) trace += a[i * d + i];
            const double ridge = 1e-10 * (trace + 1.0);
            for (std::size_t i = 0; i < d; ++i) a[i * d + i] += ridge;
            continue;
        }
        std::vector<double> x(d);
        for (std::size_t i = 0; i < d; ++i) {
            double sum = b[i];
            for (std::size_t k = 0; k < i; ++k) sum -= l[i * d + k] * x[k];
            x[i] = sum / l[i * d + i];
        }
        for (std::size_t ii = d; ii > 0; --ii) {
            const std::size_t i = ii - 1;
            double sum = x[i];
            for (std::size_t k = i + 1; k < d; ++k) sum -= l[k * d + i] * x[k];
            x[i] = sum / l[i * d + i];
        }
        return x;
    }
    throw FitError("Newton system is not positive definite");
}

} // namespace

double LogRegModel::weight(const std::string& feature) const {
    for (std::size_t i = 0; i < feature_set.size(); ++i) {
        if (feature_set[i] == feature) return weights[i];
    }
    throw SchemaError("model has no feature '" + feature + "'");
}

LogRegModel train_logreg(const std::vector<LabeledInstance>& train, const LogRegConfig& config) {
    if (config.feature_set.empty()) throw ConfigError("feature set must be nonempty");
    if (config.l2 < 0.0) throw ConfigError("l2 penalty must be nonnegative");

    const std::size_t n = train.size();
    const std::size_t d = config.feature_set.size();
    bool has_pos = false, has_neg = false;
    for (const auto& inst : train) {
        if (inst.label == 1) has_pos = true;
        else has_neg = true;
    }
    if (n == 0 || !has_pos || !has_neg) {
        throw FitError("training data must contain both classes");
    }

    // raw design matrix, row-major n x d
    std::vector<double> x(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const auto it = train[i].features.find(config.feature_set[j]);
            if (it == train[i].features.end()) {
                throw SchemaError("instance '" + train[i].id + "' lacks feature '" +
                                  config.feature_set[j] + "'");
            }
            x[i * d + j] = it->second;
        }
    }

    LogRegModel model;
    model.feature_set = config.feature_set;
    model.scaling.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x[i * d + j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = x[i * d + j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        if (var <= 0.0) {
            throw FitError("zero-variance feature '" + config.feature_set[j] + "'");
        }
        model.scaling[j] = {mean, std::sqrt(var)};
        for (std::size_t i = 0; i < n; ++i) {
            x[i * d + j] = (x[i * d + j] - mean) / model.scaling[j].stddev;
        }
    }

    // parameter vector: d weights then the intercept
    const std::size_t p = d + 1;
    std::vector<double> theta(p, 0.0);

    const auto objective = [&](const std::vector<double>& t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = t[d];
            for (std::size_t j = 0; j < d; ++j) z += t[j] * x[i * d + j];
            sum += softplus(z) - static_cast<double>(train[i].label) * z;
        }
        for (std::size_t j = 0; j < d; ++j) sum += 0.5 * config.l2 * t[j] * t[j];
        return sum;
    };

    double cur = objective(theta);
    std::vector<double> grad(p), hess(p * p), z(n);
    for (int iter = 0; iter < config.max_iter; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double zi = theta[d];
            for (std::size_t j = 0; j < d; ++j) zi += theta[j] * x[i * d + j];
            const double s = sigmoid(zi);
            const double r = s - static_cast<double>(train[i].label);
            const double w = s * (1.0 - s);
            for (std::size_t j = 0; j < d; ++j) {
                grad[j] += r * x[i * d + j];
                for (std::size_t k = 0; k <= j; ++k) {
                    hess[j * p + k] += w * x[i * d + j] * x[i * d + k];
                }
                hess[d * p + j] += w * x[i * d + j];
            }
            grad[d] += r;
            hess[d * p + d] += w;
        }
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] += config.l2 * theta[j];
            hess[j * p + j] += config.l2;
        }
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = j + 1; k < p; ++k) hess[j * p + k] = hess[k * p + j];
        }

        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < config.tol) break;

        const std::vector<double> step = solve_spd(hess, grad, p);
        double scale = 1.0;
        double next = cur;
        std::vector<double> cand(p);
        while (scale > 1e-14) {
            for (std::size_t j = 0; j < p; ++j) cand[j] = theta[j] - scale * step[j];
            next = objective(cand);
            if (next < cur) break;
            scale /= 2.0;
        }
        if (next >= cur) break;
        theta = cand;
        cur = next;
    }

    model.weights.assign(theta.begin(), theta.begin() + d);
    model.intercept = theta[d];
    for (double w : model.weights) {
        if (!std::isfinite(w)) throw FitError("training produced non-finite weights");
    }
    if (!std::isfinite(model.intercept)) throw FitError("training produced non-finite intercept");
    return model;
}

std::vector<PredictionRecord> predict(const LogRegModel& model,
                                      const std::vector<LabeledInstance>& instances,
                                      double threshold) {
    std::vector<PredictionRecord> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) {
        double q = model.intercept;
        for (std::size_t j = 0; j < model.feature_set.size(); ++j) {
            const auto it = inst.features.find(model.feature_set[j]);
            if (it == inst.features.end()) {
                throw SchemaError("instance '" + inst.id + "' lacks feature '" +
                                  model.feature_set[j] + "'");
            }
            q += model.weights[j] * (it->second - model.scaling[j].mean) / model.scaling[j].stddev;
        }
        PredictionRecord rec;
        rec.id = inst.id;
        rec.logit = q;
        rec.prob = sigmoid(q);
        rec.pred_label = rec.prob >= threshold ? 1 : 0;
        rec.true_label = inst.label;
        out.push_back(std::move(rec));
    }
    return out;
}

std::string model_to_json(const LogRegModel& model) {
    nlohmann::json doc;
    doc["features"] = model.feature_set;
    doc["weights"] = model.weights;
    doc["intercept"] = model.intercept;
    doc["scaling"] = nlohmann::json::array();
    for (std::size_t j = 0; j < model.scaling.size(); ++j) {
        doc["scaling"].push_back({{"feature", model.feature_set[j]},
                                  {"mean", model.scaling[j].mean},
                                  {"stddev", model.scaling[j].stddev}});
    }
    return doc.dump(2);
}

LogRegModel model_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid model JSON: ") + e.what());
    }
    LogRegModel model;
    model.feature_set = doc.at("features").get<std::vector<std::string>>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.intercept = doc.at("intercept").get<double>();
    for (const auto& entry : doc.at("scaling")) {
        model.scaling.push_back({entry.at("mean").get<double>(), entry.at("stddev").get<double>()});
    }
    if (model.feature_set.size() != model.weights.size() ||
        model.feature_set.size() != model.scaling.size()) {
        throw ValidationError("model JSON: features, weights and scaling disagree in length");
    }
    return model;
}

} // namespace jitcal

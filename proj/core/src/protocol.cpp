#include "jitcal/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "jitcal/errors.hpp"
#include "jitcal/metrics.hpp"
#include "internal/csv.hpp"

namespace jitcal {

namespace {

using detail::fmt_double;

std::vector<LabeledInstance> gather(const std::vector<LabeledInstance>& data,
                                    const std::vector<std::size_t>& idx) {
    std::vector<LabeledInstance> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data[i]);
    return out;
}

std::vector<PredictionRecord> gather(const std::vector<PredictionRecord>& data,
                                     const std::vector<std::size_t>& idx) {
    std::vector<PredictionRecord> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data[i]);
    return out;
}

FoldPlan make_plan(std::size_t n, const ProtocolConfig& config, std::uint64_t rep_seed,
                   const std::vector<int>* labels) {
    if (config.stratified && labels) {
        return split_folds_stratified(*labels, config.k, rep_seed);
    }
    return split_folds(n, config.k, rep_seed);
}

void append_metric_rows(std::vector<MeasurementRecord>& rows,
                        const std::vector<PredictionRecord>& preds, int repetition, Phase phase,
                        int fold, CalibrationMethod method, const ProtocolConfig& config,
                        const std::string& model_ref) {
    const AccuracyReport acc = confusion(preds, config.threshold);
    const double brier_score = brier(preds);
    for (const auto& binning : config.binnings) {
        const std::vector<Bin> bins = bin_statistics(preds, binning);
        MeasurementRecord rec;
        rec.repetition = repetition;
        rec.phase = phase;
        rec.fold = fold;
        rec.method = method;
        rec.binning = binning;
        rec.ece = ece(bins, preds.size());
        rec.mce = mce(bins);
        rec.brier = brier_score;
        rec.auc = acc.auc;
        rec.precision = acc.precision;
        rec.recall = acc.recall;
        rec.model_ref = model_ref;
        rows.push_back(std::move(rec));
    }
}

// Everything the two experiment loops share: per repetition, one
// "rotation" per validation fold produces validation predictions (and for
// RQ2 a fitted calibrator); the best rotation by validation AUC then
// produces the test predictions.
struct RotationOutcome {
    std::vector<PredictionRecord> validation_preds;
    std::optional<double> auc;
    std::string model_ref;
};

MeasurementTable run_protocol(
    std::size_t pool_size, const std::vector<int>* pool_labels, const ProtocolConfig& config,
    CalibrationMethod method,
    const std::function<RotationOutcome(int rep, const FoldPlan&, int fold)>& run_rotation,
    const std::function<std::vector<PredictionRecord>(int rep, const FoldPlan&, int best_fold)>&
        run_test) {
    MeasurementTable table;
    table.k = config.k;
    table.repetitions = config.repetitions;
    table.seed = config.seed;
    table.method = method;
    table.binnings = config.binnings;

    for (int rep = 0; rep < config.repetitions; ++rep) {
        const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(rep);
        const FoldPlan plan = make_plan(pool_size, config, rep_seed, pool_labels);

        const std::size_t rows_before = table.rows.size();
        const std::size_t skips_before = table.skipped.size();
        try {
            std::optional<double> best_auc;
            int best_fold = -1;
            for (int fold = 0; fold < config.k; ++fold) {
                RotationOutcome outcome;
                try {
                    outcome = run_rotation(rep, plan, fold);
                } catch (const FitError& e) {
                    // degenerate calibration fold: record the skip, keep going
                    table.skipped.push_back("rep " + std::to_string(rep) + " fold " +
                                            std::to_string(fold) + ": " + e.what());
                    continue;
                }
                append_metric_rows(table.rows, outcome.validation_preds, rep, Phase::Validation,
                                   fold, method, config, outcome.model_ref);
                if (!outcome.auc) {
                    table.skipped.push_back("rep " + std::to_string(rep) + " fold " +
                                            std::to_string(fold) +
                                            ": single-class validation fold, "
                                            "excluded from model selection");
                } else if (!best_auc || *outcome.auc > *best_auc) {
                    best_auc = outcome.auc;
                    best_fold = fold;
                }
            }
            if (best_fold < 0) {
                table.skipped.push_back("rep " + std::to_string(rep) +
                                        ": no rotation with defined AUC, test subset skipped");
                continue;
            }
            const std::vector<PredictionRecord> test_preds = run_test(rep, plan, best_fold);
            append_metric_rows(table.rows, test_preds, rep, Phase::Test, -1, method, config,
                               "rep" + std::to_string(rep) + ".fold" + std::to_string(best_fold));
        } catch (const FitError& e) {
            // model training failed: abort this repetition with a diagnostic
            table.rows.resize(rows_before);
            table.skipped.resize(skips_before);
            table.skipped.push_back("rep " + std::to_string(rep) +
                                    ": repetition aborted, training failed: " + e.what());
        }
    }
    return table;
}

std::optional<double> safe_auc(const std::vector<PredictionRecord>& preds) {
    try {
        return auc(preds);
    } catch (const UndefinedInputError&) {
        return std::nullopt;
    }
}

Calibrator fit_calibrator(CalibrationMethod method, const std::vector<PredictionRecord>& cal) {
    if (method == CalibrationMethod::Platt) return fit_platt(cal);
    return fit_temperature(cal);
}

std::vector<int> labels_of(const std::vector<LabeledInstance>& data) {
    std::vector<int> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].label;
    return labels;
}

std::vector<int> labels_of(const std::vector<PredictionRecord>& data) {
    std::vector<int> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) labels[i] = data[i].true_label;
    return labels;
}

} // namespace

std::vector<BinningConfig> default_binnings() {
    return {{15, BinningSchema::Equiwidth},
            {15, BinningSchema::Adaptive},
            {50, BinningSchema::Equiwidth},
            {50, BinningSchema::Adaptive}};
}

Rq2Roles rq2_roles(int k, int validation_fold) {
    if (k < 3) throw ConfigError("RQ2 needs k >= 3 so fold roles stay distinct");
    if (validation_fold < 0 || validation_fold >= k) {
        throw ConfigError("validation fold out of range");
    }
    Rq2Roles roles;
    roles.validation = validation_fold;
    roles.calibration = (validation_fold + 1) % k;
    for (int f = 0; f < k; ++f) {
        if (f != roles.validation && f != roles.calibration) roles.training.push_back(f);
    }
    return roles;
}

MeasurementTable run_rq1(const std::vector<LabeledInstance>& train,
                         const std::vector<LabeledInstance>& test, const ProtocolConfig& config) {
    const std::vector<int> labels = labels_of(train);

    // models per (rep, fold) live only for the duration of the repetition
    std::map<std::pair<int, int>, LogRegModel> models;
    const auto rotation = [&](int rep, const FoldPlan& plan, int fold) {
        const LogRegModel model =
            train_logreg(gather(train, plan.complement_indices(fold)), config.model);
        const std::vector<PredictionRecord> preds =
            predict(model, gather(train, plan.fold_indices(fold)), config.threshold);
        models[{rep, fold}] = model;
        RotationOutcome outcome;
        outcome.auc = safe_auc(preds);
        outcome.validation_preds = preds;
        outcome.model_ref = "rep" + std::to_string(rep) + ".fold" + std::to_string(fold);
        return outcome;
    };
    const auto test_run = [&](int rep, const FoldPlan&, int best_fold) {
        return predict(models.at({rep, best_fold}), test, config.threshold);
    };
    return run_protocol(train.size(), &labels, config, CalibrationMethod::None, rotation,
                        test_run);
}

MeasurementTable run_rq2(const std::vector<LabeledInstance>& train,
                         const std::vector<LabeledInstance>& test, const ProtocolConfig& config,
                         CalibrationMethod method) {
    if (method == CalibrationMethod::None) {
        throw ConfigError("RQ2 needs a calibration method (platt or temperature)");
    }
    if (config.k < 3) throw ConfigError("RQ2 needs k >= 3 so fold roles stay distinct");
    const std::vector<int> labels = labels_of(train);

    std::map<std::pair<int, int>, LogRegModel> models;
    std::map<std::pair<int, int>, Calibrator> calibrators;
    const auto rotation = [&](int rep, const FoldPlan& plan, int fold) {
        const Rq2Roles roles = rq2_roles(config.k, fold);
        std::vector<std::size_t> train_idx;
        for (int f : roles.training) {
            const auto idx = plan.fold_indices(f);
            train_idx.insert(train_idx.end(), idx.begin(), idx.end());
        }
        std::sort(train_idx.begin(), train_idx.end());
        const LogRegModel model = train_logreg(gather(train, train_idx), config.model);
        const Calibrator calibrator = fit_calibrator(
            method,
            predict(model, gather(train, plan.fold_indices(roles.calibration)), config.threshold));
        const std::vector<PredictionRecord> preds = apply_calibrator(
            calibrator, predict(model, gather(train, plan.fold_indices(fold)), config.threshold),
            config.threshold);
        models[{rep, fold}] = model;
        calibrators[{rep, fold}] = calibrator;
        RotationOutcome outcome;
        outcome.auc = safe_auc(preds);
        outcome.validation_preds = preds;
        outcome.model_ref = "rep" + std::to_string(rep) + ".fold" + std::to_string(fold);
        return outcome;
    };
    const auto test_run = [&](int rep, const FoldPlan&, int best_fold) {
        return apply_calibrator(calibrators.at({rep, best_fold}),
                                predict(models.at({rep, best_fold}), test, config.threshold),
                                config.threshold);
    };
    return run_protocol(train.size(), &labels, config, method, rotation, test_run);
}

MeasurementTable run_rq1_external(const std::vector<PredictionRecord>& pool,
                                  const std::vector<PredictionRecord>& test,
                                  const ProtocolConfig& config) {
    const std::vector<int> labels = labels_of(pool);
    const auto rotation = [&](int rep, const FoldPlan& plan, int fold) {
        RotationOutcome outcome;
        outcome.validation_preds = gather(pool, plan.fold_indices(fold));
        outcome.auc = safe_auc(outcome.validation_preds);
        outcome.model_ref = "external.rep" + std::to_string(rep) + ".fold" + std::to_string(fold);
        return outcome;
    };
    const auto test_run = [&](int, const FoldPlan&, int) { return test; };
    return run_protocol(pool.size(), &labels, config, CalibrationMethod::None, rotation, test_run);
}

MeasurementTable run_rq2_external(const std::vector<PredictionRecord>& pool,
                                  const std::vector<PredictionRecord>& test,
                                  const ProtocolConfig& config, CalibrationMethod method) {
    if (method == CalibrationMethod::None) {
        throw ConfigError("RQ2 needs a calibration method (platt or temperature)");
    }
    if (config.k < 3) throw ConfigError("RQ2 needs k >= 3 so fold roles stay distinct");
    const std::vector<int> labels = labels_of(pool);

    std::map<std::pair<int, int>, Calibrator> calibrators;
    const auto rotation = [&](int rep, const FoldPlan& plan, int fold) {
        const Rq2Roles roles = rq2_roles(config.k, fold);
        const Calibrator calibrator =
            fit_calibrator(method, gather(pool, plan.fold_indices(roles.calibration)));
        calibrators[{rep, fold}] = calibrator;
        RotationOutcome outcome;
        outcome.validation_preds = apply_calibrator(
            calibrator, gather(pool, plan.fold_indices(fold)), config.threshold);
        outcome.auc = safe_auc(outcome.validation_preds);
        outcome.model_ref = "external.rep" + std::to_string(rep) + ".fold" + std::to_string(fold);
        return outcome;
    };
    const auto test_run = [&](int rep, const FoldPlan&, int best_fold) {
        return apply_calibrator(calibrators.at({rep, best_fold}), test, config.threshold);
    };
    return run_protocol(pool.size(), &labels, config, method, rotation, test_run);
}

namespace {

double metric_value(const MeasurementRecord& rec, const std::string& metric) {
    if (metric == "ece") return rec.ece;
    if (metric == "mce") return rec.mce;
    return rec.brier;
}

// deterministic per-comparison seed stream
std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return base ^ h;
}

std::string row_key(const MeasurementRecord& rec) {
    return "rep" + std::to_string(rec.repetition) +
           (rec.phase == Phase::Test ? ".test" : ".fold" + std::to_string(rec.fold));
}

} // namespace

std::vector<ComparisonRow> compare(const MeasurementTable& before, const MeasurementTable& after,
                                   std::uint64_t seed) {
    if (before.k != after.k || before.repetitions != after.repetitions) {
        throw ComparisonError("tables disagree on fold count or repetitions");
    }
    if (before.binnings != after.binnings) {
        throw ComparisonError("tables disagree on binning configurations");
    }
    if (before.seed && after.seed && *before.seed != *after.seed) {
        throw ComparisonError("tables were produced under different seeds; folds do not align");
    }

    // key -> row index, per (config, phase); rows within one config/phase
    // are unique by construction
    const auto& cfg0 = before.binnings.front();
    const auto index_rows = [](const MeasurementTable& table, const BinningConfig& cfg,
                               Phase phase) {
        std::map<std::string, const MeasurementRecord*> out;
        for (const auto& rec : table.rows) {
            if (rec.binning == cfg && rec.phase == phase) out[row_key(rec)] = &rec;
        }
        return out;
    };

    // structure check on the first config is representative: every config
    // shares the same (rep, fold) skeleton
    {
        const auto b_val = index_rows(before, cfg0, Phase::Validation);
        const auto a_val = index_rows(after, cfg0, Phase::Validation);
        const auto b_test = index_rows(before, cfg0, Phase::Test);
        const auto a_test = index_rows(after, cfg0, Phase::Test);
        std::vector<std::string> unmatched;
        for (const auto& [key, _] : b_val)
            if (!a_val.count(key)) unmatched.push_back(key);
        for (const auto& [key, _] : a_val)
            if (!b_val.count(key)) unmatched.push_back(key);
        for (const auto& [key, _] : b_test)
            if (!a_test.count(key)) unmatched.push_back(key);
        for (const auto& [key, _] : a_test)
            if (!b_test.count(key)) unmatched.push_back(key);
        if (!unmatched.empty()) {
            std::string msg = "tables do not pair up; unmatched keys:";
            for (const auto& key : unmatched) msg += " " + key;
            throw ComparisonError(msg);
        }
        if (b_test.empty()) throw ComparisonError("no test rows to compare");
    }

    std::vector<ComparisonRow> out;
    const auto build = [&](const std::string& metric, const BinningConfig& cfg) {
        ComparisonRow row;
        row.metric = metric;
        row.binning = cfg;

        const auto b_val = index_rows(before, cfg, Phase::Validation);
        const auto a_val = index_rows(after, cfg, Phase::Validation);
        const auto b_test = index_rows(before, cfg, Phase::Test);
        const auto a_test = index_rows(after, cfg, Phase::Test);

        std::vector<double> bv, av, bt, at;
        row.val_min_before = b_val.empty() ? 0.0 : 1.0;
        row.val_max_before = 0.0;
        row.val_min_after = b_val.empty() ? 0.0 : 1.0;
        row.val_max_after = 0.0;
        for (const auto& [key, rec] : b_val) {
            const double vb = metric_value(*rec, metric);
            const double va = metric_value(*a_val.at(key), metric);
            bv.push_back(vb);
            av.push_back(va);
            row.val_min_before = std::min(row.val_min_before, vb);
            row.val_max_before = std::max(row.val_max_before, vb);
            row.val_min_after = std::min(row.val_min_after, va);
            row.val_max_after = std::max(row.val_max_after, va);
        }
        for (const auto& [key, rec] : b_test) {
            bt.push_back(metric_value(*rec, metric));
            at.push_back(metric_value(*a_test.at(key), metric));
        }

        row.test_avg_before = std::accumulate(bt.begin(), bt.end(), 0.0) / bt.size();
        row.test_avg_after = std::accumulate(at.begin(), at.end(), 0.0) / at.size();
        row.delta = row.test_avg_after - row.test_avg_before;

        const std::string tag = metric + "." + schema_name(cfg.schema) + std::to_string(cfg.count);
        row.significance_validation =
            significance(bv, av, derive_seed(seed, tag + ".val"), metric + " (validation)");
        row.significance_test =
            significance(bt, at, derive_seed(seed, tag + ".test"), metric + " (test)");
        return row;
    };

    for (const auto& cfg : before.binnings) {
        out.push_back(build("ece", cfg));
        out.push_back(build("mce", cfg));
    }
    out.push_back(build("brier", cfg0)); // binning-independent
    return out;
}

int selected_fold(const MeasurementTable& table, int repetition) {
    for (const auto& rec : table.rows) {
        if (rec.phase != Phase::Test || rec.repetition != repetition) continue;
        const auto pos = rec.model_ref.rfind("fold");
        if (pos == std::string::npos) return -1;
        return std::stoi(rec.model_ref.substr(pos + 4));
    }
    return -1;
}

void write_measurements_csv(std::ostream& out, const MeasurementTable& table) {
    out << "repetition,phase,fold,method,schema,bins,ece,mce,brier,auc,precision,recall,"
           "model_ref\n";
    for (const auto& rec : table.rows) {
        out << rec.repetition << ',' << (rec.phase == Phase::Test ? "test" : "validation") << ',';
        if (rec.phase == Phase::Test) out << "test";
        else out << rec.fold;
        out << ',' << method_name(rec.method) << ',' << schema_name(rec.binning.schema) << ','
            << rec.binning.count << ',' << fmt_double(rec.ece) << ',' << fmt_double(rec.mce) << ','
            << fmt_double(rec.brier) << ',';
        if (rec.auc) out << fmt_double(*rec.auc);
        out << ',';
        if (rec.precision) out << fmt_double(*rec.precision);
        out << ',';
        if (rec.recall) out << fmt_double(*rec.recall);
        out << ',' << detail::csv_escape(rec.model_ref) << '\n';
    }
}

MeasurementTable read_measurements_csv(std::istream& in) {
    std::string line;
    if (!detail::read_line(in, line)) throw SchemaError("empty measurement CSV");
    const std::vector<std::string> header = detail::split_csv(line);
    const std::vector<std::string> expected = {"repetition", "phase", "fold",      "method",
                                               "schema",     "bins",  "ece",       "mce",
                                               "brier",      "auc",   "precision", "recall",
                                               "model_ref"};
    if (header != expected) throw SchemaError("unexpected measurement CSV header");

    MeasurementTable table;
    table.seed = std::nullopt;
    std::set<std::pair<int, BinningSchema>> seen_cfg;
    int max_fold = -1, max_rep = -1;
    std::size_t row_no = 0;
    while (detail::read_line(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = detail::split_csv(line);
        if (cells.size() != expected.size()) {
            throw ParseError("row " + std::to_string(row_no) + ": wrong field count");
        }
        const auto need = [&](std::size_t col) {
            const auto v = detail::parse_double(cells[col]);
            if (!v) {
                throw ParseError("row " + std::to_string(row_no) + ": column '" + expected[col] +
                                 "' is not numeric");
            }
            return *v;
        };
        MeasurementRecord rec;
        rec.repetition = static_cast<int>(need(0));
        rec.phase = cells[1] == "test" ? Phase::Test : Phase::Validation;
        rec.fold = rec.phase == Phase::Test ? -1 : static_cast<int>(need(2));
        rec.method = method_from_name(cells[3]);
        rec.binning.schema = schema_from_name(cells[4]);
        rec.binning.count = static_cast<int>(need(5));
        rec.ece = need(6);
        rec.mce = need(7);
        rec.brier = need(8);
        if (!cells[9].empty()) rec.auc = need(9);
        if (!cells[10].empty()) rec.precision = need(10);
        if (!cells[11].empty()) rec.recall = need(11);
        rec.model_ref = cells[12];

        max_rep = std::max(max_rep, rec.repetition);
        max_fold = std::max(max_fold, rec.fold);
        if (seen_cfg.insert({rec.binning.count, rec.binning.schema}).second) {
            table.binnings.push_back(rec.binning);
        }
        table.method = rec.method;
        table.rows.push_back(std::move(rec));
    }
    if (table.rows.empty()) throw SchemaError("measurement CSV has no rows");
    table.repetitions = max_rep + 1;
    table.k = max_fold + 1;
    return table;
}

MeasurementTable read_measurements_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    return read_measurements_csv(in);
}

} // namespace jitcal

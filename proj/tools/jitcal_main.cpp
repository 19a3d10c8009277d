// jitcal command-line tool: calibration measurement, recalibration and the
// repeated cross-validation experiment over commit datasets or prediction
// exports. Data goes to files under --out; summaries to stdout;
// diagnostics to stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jitcal/dataset.hpp"
#include "jitcal/errors.hpp"
#include "jitcal/metrics.hpp"
#include "jitcal/predictor.hpp"
#include "jitcal/protocol.hpp"
#include "jitcal/recalibration.hpp"
#include "jitcal/report.hpp"
#include "jitcal/stats.hpp"

namespace fs = std::filesystem;
using namespace jitcal;

namespace {

struct CommonOpts {
    std::vector<int> bins{15, 50};
    std::string schema = "both";
    double threshold = kDefaultThreshold;
    std::string out = ".";
    std::uint64_t seed = 0;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--bins", opts.bins, "Bin counts, e.g. --bins 15 50")->delimiter(',');
    cmd->add_option("--schema", opts.schema, "Binning schema: equiwidth, adaptive or both")
        ->check(CLI::IsMember({"equiwidth", "adaptive", "both"}));
    cmd->add_option("--threshold", opts.threshold, "Classification threshold (default 0.5)");
    cmd->add_option("--out", opts.out, "Output directory (default .)");
    cmd->add_option("--seed", opts.seed, "Master seed for anything randomized");
    cmd->add_option("--format", opts.format, "Prediction file output format")
        ->check(CLI::IsMember({"csv", "json"}));
}

std::vector<BinningConfig> binning_configs(const CommonOpts& opts) {
    std::vector<BinningConfig> configs;
    for (int b : opts.bins) {
        if (b < 1) throw ConfigError("bin count must be >= 1");
        if (opts.schema == "equiwidth" || opts.schema == "both") {
            configs.push_back({b, BinningSchema::Equiwidth});
        }
        if (opts.schema == "adaptive" || opts.schema == "both") {
            configs.push_back({b, BinningSchema::Adaptive});
        }
    }
    return configs;
}

std::string config_tag(const BinningConfig& cfg) {
    return schema_name(cfg.schema) + std::to_string(cfg.count);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

std::vector<PredictionRecord> load_predictions_checked(const std::string& path,
                                                       double threshold) {
    auto records = load_predictions_file(path, threshold);
    if (records.empty()) throw ValidationError("no predictions loaded from '" + path + "'");
    return records;
}

// A prediction export carries prob/true_label columns; a commit dataset
// carries la plus bug/label. Decides the experiment mode.
bool is_prediction_export(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    const bool has_prob = header.find("prob") != std::string::npos;
    const bool has_true = header.find("true_label") != std::string::npos;
    return has_prob && has_true;
}

int cmd_metrics(const std::string& input, const CommonOpts& opts) {
    const auto records = load_predictions_checked(input, opts.threshold);
    fs::create_directories(opts.out);

    std::vector<CalibrationReport> reports;
    for (const auto& cfg : binning_configs(opts)) {
        const CalibrationReport rep = calibration_report(records, cfg);
        reports.push_back(rep);

        auto bins_csv = open_out(fs::path(opts.out) / ("bins_" + config_tag(cfg) + ".csv"));
        write_bin_table_csv(bins_csv, rep.bins);

        const std::vector<ReliabilityCurve> curves{{"predictions", reliability_series(rep.bins)}};
        auto svg = open_out(fs::path(opts.out) / ("reliability_" + config_tag(cfg) + ".svg"));
        write_reliability_svg(svg, curves, "Reliability (" + schema_name(cfg.schema) + ", B=" +
                                               std::to_string(cfg.count) + ")");
        auto rel_csv = open_out(fs::path(opts.out) / ("reliability_" + config_tag(cfg) + ".csv"));
        write_reliability_csv(rel_csv, curves);

        auto sizes_svg = open_out(fs::path(opts.out) / ("bin_sizes_" + config_tag(cfg) + ".svg"));
        write_bin_sizes_svg(sizes_svg, rep.bins,
                            "Bin sizes (" + schema_name(cfg.schema) + ", B=" +
                                std::to_string(cfg.count) + ")");

        std::cout << "[" << schema_name(cfg.schema) << ",B=" << cfg.count << "] ECE "
                  << format_percent(rep.ece) << "% MCE " << format_percent(rep.mce) << "% Brier "
                  << format_percent(rep.brier) << "%\n";
    }
    auto json_out = open_out(fs::path(opts.out) / "calibration_report.json");
    json_out << reports_to_json(reports, confusion(records, opts.threshold)) << '\n';
    return 0;
}

int cmd_recalibrate(const std::string& cal_path, const std::string& target_path,
                    const std::string& method_str, const CommonOpts& opts) {
    const CalibrationMethod method = method_from_name(method_str);
    if (method == CalibrationMethod::None) {
        throw ConfigError("recalibrate needs --method platt or --method temperature");
    }
    const auto calibration = load_predictions_checked(cal_path, opts.threshold);
    const auto target = load_predictions_checked(target_path, opts.threshold);

    std::set<std::string> cal_ids;
    for (const auto& r : calibration) {
        if (!r.id.empty()) cal_ids.insert(r.id);
    }
    std::size_t overlap = 0;
    for (const auto& r : target) {
        if (!r.id.empty() && cal_ids.count(r.id)) ++overlap;
    }
    if (overlap > 0) {
        std::cerr << "warning: " << overlap
                  << " ids overlap between calibration and target; calibration "
                     "measurements may be biased\n";
    }

    const Calibrator calibrator = method == CalibrationMethod::Platt
                                      ? Calibrator(fit_platt(calibration))
                                      : Calibrator(fit_temperature(calibration));
    const auto recalibrated = apply_calibrator(calibrator, target, opts.threshold);

    fs::create_directories(opts.out);
    const bool json = opts.format == "json";
    auto pred_out =
        open_out(fs::path(opts.out) / (json ? "recalibrated.jsonl" : "recalibrated.csv"));
    save_predictions(pred_out, recalibrated,
                     json ? PredictionFormat::JsonLines : PredictionFormat::Csv);
    auto params_out = open_out(fs::path(opts.out) / "calibrator.json");
    params_out << calibrator_to_json(calibrator) << '\n';

    for (const auto& cfg : binning_configs(opts)) {
        const double before = ece(bin_statistics(target, cfg), target.size());
        const double after = ece(bin_statistics(recalibrated, cfg), recalibrated.size());
        std::cout << "[" << schema_name(cfg.schema) << ",B=" << cfg.count << "] ECE before "
                  << format_percent(before) << "% after " << format_percent(after) << "%\n";
    }
    return 0;
}

std::vector<CalibrationMethod> requested_methods(const std::string& method_str) {
    if (method_str == "both") {
        return {CalibrationMethod::Platt, CalibrationMethod::Temperature};
    }
    const CalibrationMethod m = method_from_name(method_str);
    if (m == CalibrationMethod::None) return {};
    return {m};
}

struct ExperimentData {
    bool external = false;
    std::vector<LabeledInstance> train_commits, test_commits;
    std::vector<PredictionRecord> train_preds, test_preds;
};

// Rebuilds the test-set prediction curve for one repetition of a finished
// run: retrains (or refits) exactly what the recorded model_ref names,
// from the same fold plan the run used.
std::vector<PredictionRecord> figure_test_predictions(const ExperimentData& data,
                                                      const MeasurementTable& table,
                                                      const ProtocolConfig& config,
                                                      CalibrationMethod method, int repetition) {
    const int fold = selected_fold(table, repetition);
    if (fold < 0) return {};
    const std::size_t n = data.external ? data.train_preds.size() : data.train_commits.size();
    const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(repetition);
    FoldPlan plan;
    if (config.stratified) {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = data.external ? data.train_preds[i].true_label
                                      : data.train_commits[i].label;
        }
        plan = split_folds_stratified(labels, config.k, rep_seed);
    } else {
        plan = split_folds(n, config.k, rep_seed);
    }

    if (method == CalibrationMethod::None) {
        if (data.external) return data.test_preds;
        const LogRegModel model = train_logreg(
            [&] {
                std::vector<LabeledInstance> out;
                for (std::size_t i : plan.complement_indices(fold))
                    out.push_back(data.train_commits[i]);
                return out;
            }(),
            config.model);
        return predict(model, data.test_commits, config.threshold);
    }

    const Rq2Roles roles = rq2_roles(config.k, fold);
    std::vector<PredictionRecord> cal_preds;
    std::vector<PredictionRecord> test_preds;
    if (data.external) {
        for (std::size_t i : plan.fold_indices(roles.calibration))
            cal_preds.push_back(data.train_preds[i]);
        test_preds = data.test_preds;
    } else {
        std::vector<LabeledInstance> train_insts;
        for (int f : roles.training) {
            for (std::size_t i : plan.fold_indices(f)) train_insts.push_back(data.train_commits[i]);
        }
        const LogRegModel model = train_logreg(train_insts, config.model);
        std::vector<LabeledInstance> cal_insts;
        for (std::size_t i : plan.fold_indices(roles.calibration))
            cal_insts.push_back(data.train_commits[i]);
        cal_preds = predict(model, cal_insts, config.threshold);
        test_preds = predict(model, data.test_commits, config.threshold);
    }
    const Calibrator calibrator = method == CalibrationMethod::Platt
                                      ? Calibrator(fit_platt(cal_preds))
                                      : Calibrator(fit_temperature(cal_preds));
    return apply_calibrator(calibrator, test_preds, config.threshold);
}

int cmd_experiment(const std::string& train_path, const std::string& test_path,
                   const std::string& method_str, int folds, int repetitions, bool stratified,
                   const CommonOpts& opts) {
    ExperimentData data;
    data.external = is_prediction_export(train_path);
    if (data.external != is_prediction_export(test_path)) {
        throw SchemaError("train and test files must both be commit datasets or both be "
                          "prediction exports");
    }
    if (data.external) {
        data.train_preds = load_predictions_checked(train_path, opts.threshold);
        data.test_preds = load_predictions_checked(test_path, opts.threshold);
        std::cerr << "note: inputs are prediction exports; running in external-model mode "
                     "(no retraining per fold)\n";
    } else {
        data.train_commits = load_commits_file(train_path);
        data.test_commits = load_commits_file(test_path);
    }

    ProtocolConfig config;
    config.k = folds;
    config.repetitions = repetitions;
    config.seed = opts.seed;
    config.binnings = binning_configs(opts);
    config.threshold = opts.threshold;
    config.stratified = stratified;

    fs::create_directories(opts.out);

    const MeasurementTable rq1 = data.external
                                     ? run_rq1_external(data.train_preds, data.test_preds, config)
                                     : run_rq1(data.train_commits, data.test_commits, config);
    {
        auto out = open_out(fs::path(opts.out) / "rq1_measurements.csv");
        write_measurements_csv(out, rq1);
    }
    for (const auto& note : rq1.skipped) std::cerr << "rq1: " << note << '\n';

    std::vector<ReliabilityCurve> curves_per_cfg; // built lazily below
    const std::vector<CalibrationMethod> methods = requested_methods(method_str);

    // Figure curves come from repetition 0's selected model.
    std::vector<std::pair<std::string, std::vector<PredictionRecord>>> figure_preds;
    figure_preds.emplace_back(
        "original", figure_test_predictions(data, rq1, config, CalibrationMethod::None, 0));

    for (const CalibrationMethod method : methods) {
        const MeasurementTable rq2 =
            data.external ? run_rq2_external(data.train_preds, data.test_preds, config, method)
                          : run_rq2(data.train_commits, data.test_commits, config, method);
        {
            auto out = open_out(fs::path(opts.out) /
                                ("rq2_" + method_name(method) + "_measurements.csv"));
            write_measurements_csv(out, rq2);
        }
        for (const auto& note : rq2.skipped) {
            std::cerr << "rq2(" << method_name(method) << "): " << note << '\n';
        }

        const std::vector<ComparisonRow> comparison = compare(rq1, rq2, opts.seed);
        const std::string table_text =
            render_comparison_table(comparison, "OG", method_name(method));
        auto txt = open_out(fs::path(opts.out) / ("comparison_" + method_name(method) + ".txt"));
        txt << table_text;
        auto json = open_out(fs::path(opts.out) / ("comparison_" + method_name(method) + ".json"));
        json << comparison_to_json(comparison) << '\n';
        std::cout << "== OG vs " << method_name(method) << " ==\n" << table_text << '\n';

        figure_preds.emplace_back(method_name(method),
                                  figure_test_predictions(data, rq2, config, method, 0));
    }

    for (const auto& cfg : config.binnings) {
        std::vector<ReliabilityCurve> curves;
        for (const auto& [label, preds] : figure_preds) {
            if (preds.empty()) continue;
            curves.push_back({label, reliability_series(bin_statistics(preds, cfg))});
        }
        if (curves.empty()) continue;
        auto svg = open_out(fs::path(opts.out) / ("reliability_" + config_tag(cfg) + ".svg"));
        write_reliability_svg(svg, curves, "Reliability on test set (" + schema_name(cfg.schema) +
                                               ", B=" + std::to_string(cfg.count) + ")");
        auto csv = open_out(fs::path(opts.out) / ("reliability_" + config_tag(cfg) + ".csv"));
        write_reliability_csv(csv, curves);
    }
    return 0;
}

int cmd_report(const std::string& before_path, const std::string& after_path,
               const CommonOpts& opts) {
    const MeasurementTable before = read_measurements_csv_file(before_path);
    const MeasurementTable after = read_measurements_csv_file(after_path);
    const std::vector<ComparisonRow> comparison = compare(before, after, opts.seed);

    const std::string before_label =
        before.method == CalibrationMethod::None ? "OG" : method_name(before.method);
    const std::string table_text =
        render_comparison_table(comparison, before_label, method_name(after.method));

    fs::create_directories(opts.out);
    auto txt = open_out(fs::path(opts.out) / "comparison.txt");
    txt << table_text;
    auto json = open_out(fs::path(opts.out) / "comparison.json");
    json << comparison_to_json(comparison) << '\n';
    std::cout << table_text;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibration measurement and recalibration for just-in-time defect predictors"};
    app.require_subcommand(1);

    CommonOpts metrics_opts;
    std::string metrics_input;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "Calibration report for a prediction file");
    metrics_cmd->add_option("predictions", metrics_input, "Prediction file (CSV or JSON lines)")
        ->required();
    add_common(metrics_cmd, metrics_opts);

    CommonOpts recal_opts;
    std::string recal_cal, recal_target, recal_method = "platt";
    CLI::App* recal_cmd =
        app.add_subcommand("recalibrate", "Fit a calibrator on one file, apply it to another");
    recal_cmd->add_option("calibration", recal_cal, "Calibration-fold prediction file")->required();
    recal_cmd->add_option("target", recal_target, "Prediction file to recalibrate")->required();
    recal_cmd->add_option("--method", recal_method, "platt or temperature")
        ->check(CLI::IsMember({"platt", "temperature"}));
    add_common(recal_cmd, recal_opts);

    CommonOpts exp_opts;
    std::string exp_train, exp_test, exp_method = "both";
    int exp_folds = 10, exp_reps = 10;
    bool exp_stratified = false;
    CLI::App* exp_cmd = app.add_subcommand(
        "experiment", "Repeated cross-validation, recalibration and comparison");
    exp_cmd->add_option("train", exp_train, "Training commit CSV or prediction export")->required();
    exp_cmd->add_option("test", exp_test, "Test commit CSV or prediction export")->required();
    exp_cmd->add_option("--method", exp_method, "none, platt, temperature or both")
        ->check(CLI::IsMember({"none", "platt", "temperature", "both"}));
    exp_cmd->add_option("--folds", exp_folds, "Cross-validation fold count (default 10)");
    exp_cmd->add_option("--repetitions", exp_reps, "Protocol repetitions (default 10)");
    exp_cmd->add_flag("--stratified", exp_stratified,
                      "Stratify fold splits by class (off by default)");
    add_common(exp_cmd, exp_opts);

    CommonOpts report_opts;
    std::string report_before, report_after;
    CLI::App* report_cmd =
        app.add_subcommand("report", "Comparison tables from two measurement CSVs");
    report_cmd->add_option("before", report_before, "Measurement CSV without recalibration")
        ->required();
    report_cmd->add_option("after", report_after, "Measurement CSV with recalibration")->required();
    add_common(report_cmd, report_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (metrics_cmd->parsed()) return cmd_metrics(metrics_input, metrics_opts);
        if (recal_cmd->parsed()) {
            return cmd_recalibrate(recal_cal, recal_target, recal_method, recal_opts);
        }
        if (exp_cmd->parsed()) {
            return cmd_experiment(exp_train, exp_test, exp_method, exp_folds, exp_reps,
                                  exp_stratified, exp_opts);
        }
        if (report_cmd->parsed()) return cmd_report(report_before, report_after, report_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

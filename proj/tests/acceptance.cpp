// Acceptance suite: runs every acceptance criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exit status is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jitcal/dataset.hpp"
#include "jitcal/errors.hpp"
#include "jitcal/metrics.hpp"
#include "jitcal/predictor.hpp"
#include "jitcal/protocol.hpp"
#include "jitcal/recalibration.hpp"
#include "jitcal/report.hpp"
#include "jitcal/stats.hpp"
#include "oracles.hpp"
#include "stats_oracle_data.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using namespace jitcal;
using Clock = std::chrono::steady_clock;

namespace {

using Failures = std::vector<std::string>;

void require(Failures& fails, bool ok, const std::string& what) {
    if (!ok) fails.push_back(what);
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

const fs::path& out_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "jitcal_acceptance";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// ---------------------------------------------------------------- 1 ----
void criterion_metric_oracle(Failures& fails) {
    const auto start = Clock::now();
    Rng rng(9001);
    for (int instance = 0; instance < 1000; ++instance) {
        const std::size_t m = 1 + rng.bounded(50);
        const int b = 1 + static_cast<int>(rng.bounded(5));
        const auto records = synth::random_records(m, rng);
        for (const bool adaptive : {false, true}) {
            const BinningConfig cfg{b, adaptive ? BinningSchema::Adaptive
                                                : BinningSchema::Equiwidth};
            const auto naive = oracles::naive_calibration_metrics(records, b, adaptive);
            const auto report = calibration_report(records, cfg);
            if (std::abs(report.ece - naive.ece) > 1e-12 ||
                std::abs(report.mce - naive.mce) > 1e-12 ||
                std::abs(report.brier - naive.brier) > 1e-12) {
                require(fails, false,
                        "instance " + std::to_string(instance) + " (" + schema_name(cfg.schema) +
                            ", B=" + std::to_string(b) + ") disagrees with the brute force");
                return;
            }
        }
    }
    const double elapsed = seconds_since(start);
    require(fails, elapsed < 5.0, "runtime " + fmt(elapsed) + "s exceeds 5s");
}

// ---------------------------------------------------------------- 2 ----
void criterion_hand_instance(Failures& fails) {
    std::vector<PredictionRecord> records;
    const double probs[] = {0.2, 0.4, 0.6, 0.8};
    const int labels[] = {0, 1, 1, 1};
    for (int i = 0; i < 4; ++i) {
        PredictionRecord rec;
        rec.prob = probs[i];
        rec.logit = logit_of(probs[i]);
        rec.true_label = labels[i];
        rec.pred_label = probs[i] >= 0.5 ? 1 : 0;
        records.push_back(rec);
    }
    const auto report = calibration_report(records, {2, BinningSchema::Equiwidth});
    require(fails, std::abs(report.ece - 0.25) <= 1e-15, "ECE " + fmt(report.ece) + " != 0.25");
    require(fails, std::abs(report.mce - 0.30) <= 1e-15, "MCE " + fmt(report.mce) + " != 0.30");
    require(fails, std::abs(report.brier - 0.15) <= 1e-15,
            "Brier " + fmt(report.brier) + " != 0.15");
}

// ---------------------------------------------------------------- 3 ----
void criterion_invariants(Failures& fails) {
    Rng rng(9003);
    for (int instance = 0; instance < 1000; ++instance) {
        const std::size_t m = 1 + rng.bounded(50);
        const auto records = synth::random_records(m, rng);
        double brier_ref = -1.0;
        for (int b = 1; b <= 5; ++b) {
            for (const auto schema : {BinningSchema::Equiwidth, BinningSchema::Adaptive}) {
                const auto report = calibration_report(records, {b, schema});
                if (report.ece > report.mce + 1e-15) {
                    require(fails, false, "ECE > MCE on instance " + std::to_string(instance));
                    return;
                }
                if (brier_ref < 0.0) brier_ref = report.brier;
                if (std::abs(report.brier - brier_ref) > 1e-15) {
                    require(fails, false,
                            "Brier varies across binnings on instance " + std::to_string(instance));
                    return;
                }
            }
        }
    }
}

// ---------------------------------------------------------------- 4 ----
void criterion_recalibration_recovery(Failures& fails) {
    {
        const auto start = Clock::now();
        Rng rng(9004);
        const auto cal = synth::logistic_records(10000, rng, -4.0, 4.0, 2.0, 1.0);
        const PlattParams params = fit_platt(cal);
        require(fails, std::abs(params.alpha - 2.0) <= 0.15,
                "alpha " + fmt(params.alpha) + " not within 0.15 of 2");
        require(fails, std::abs(params.beta - 1.0) <= 0.15,
                "beta " + fmt(params.beta) + " not within 0.15 of 1");
        const auto grid = oracles::platt_grid_minimizer(cal, 1.5, 2.5, 0.5, 1.5, 20);
        require(fails, params.final_nll <= grid.nll + 1e-9,
                "fitted NLL above the grid-search minimum");
        require(fails, std::abs(grid.alpha - 2.0) <= 0.15 && std::abs(grid.beta - 1.0) <= 0.15,
                "grid oracle minimizer is not near (2, 1)");
        const double elapsed = seconds_since(start);
        require(fails, elapsed < 2.0, "Platt recovery took " + fmt(elapsed) + "s (limit 2s)");
    }
    {
        const auto start = Clock::now();
        Rng rng(9005);
        const auto cal = synth::logistic_records(10000, rng, -4.0, 4.0, 0.5, 0.0);
        const TemperatureParam param = fit_temperature(cal);
        require(fails, std::abs(param.t - 2.0) <= 0.1,
                "temperature " + fmt(param.t) + " not within 0.1 of 2");
        const auto grid = oracles::temperature_grid_minimizer(cal, 1.0, 4.0, 150);
        require(fails, param.final_nll <= grid.nll + 1e-9,
                "fitted NLL above the scalar grid minimum");
        const double elapsed = seconds_since(start);
        require(fails, elapsed < 2.0,
                "temperature recovery took " + fmt(elapsed) + "s (limit 2s)");
    }
}

// shared by criteria 5 and 10: an overconfident predictor (logits
// sharpened threefold) with a disjoint calibration fold
struct SharpenedSetup {
    std::vector<PredictionRecord> eval;
    std::vector<PredictionRecord> calibration;
    PlattParams platt;
    TemperatureParam temperature;
    std::vector<PredictionRecord> eval_platt;
    std::vector<PredictionRecord> eval_temp;
};

const SharpenedSetup& sharpened_setup() {
    static const SharpenedSetup setup = [] {
        SharpenedSetup s;
        Rng rng(9024);
        s.eval = synth::logistic_records(10000, rng, -4.0, 4.0, 1.0, 0.0, 3.0);
        s.calibration = synth::logistic_records(10000, rng, -4.0, 4.0, 1.0, 0.0, 3.0);
        s.platt = fit_platt(s.calibration);
        s.temperature = fit_temperature(s.calibration);
        s.eval_platt = apply_platt(s.platt, s.eval);
        s.eval_temp = apply_temperature(s.temperature, s.eval);
        return s;
    }();
    return setup;
}

// ---------------------------------------------------------------- 5 ----
void criterion_miscalibration_reduction(Failures& fails) {
    const auto& s = sharpened_setup();
    const BinningConfig eq15{15, BinningSchema::Equiwidth};
    const double before = ece(bin_statistics(s.eval, eq15), s.eval.size());
    const double after_platt = ece(bin_statistics(s.eval_platt, eq15), s.eval.size());
    const double after_temp = ece(bin_statistics(s.eval_temp, eq15), s.eval.size());

    require(fails, after_platt <= 0.5 * before,
            "Platt reduced ECE only from " + fmt(before) + " to " + fmt(after_platt));
    require(fails, after_temp <= 0.7 * before,
            "temperature reduced ECE only from " + fmt(before) + " to " + fmt(after_temp));

    // determinism under the fixed seed: regenerate and refit
    Rng rng(9024);
    const auto eval2 = synth::logistic_records(10000, rng, -4.0, 4.0, 1.0, 0.0, 3.0);
    const auto cal2 = synth::logistic_records(10000, rng, -4.0, 4.0, 1.0, 0.0, 3.0);
    const PlattParams platt2 = fit_platt(cal2);
    require(fails, platt2.alpha == s.platt.alpha && platt2.beta == s.platt.beta,
            "refit under the same seed changed the Platt parameters");
    require(fails, ece(bin_statistics(eval2, eq15), eval2.size()) == before,
            "regenerated data changed the before-ECE");
}

// ---------------------------------------------------------------- 6 ----
void criterion_decision_invariance(Failures& fails) {
    Rng rng(9006);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 100 + rng.bounded(400);
        const double gen_scale = 0.25 + 3.0 * rng.uniform();
        const double gen_shift = -1.0 + 2.0 * rng.uniform();
        const auto records = synth::logistic_records(n, rng, -5.0, 5.0, gen_scale, gen_shift);

        const TemperatureParam temp = fit_temperature(records);
        const auto scaled = apply_temperature(temp, records);
        const AccuracyReport before = confusion(records);
        const AccuracyReport after = confusion(scaled);
        for (std::size_t i = 0; i < n; ++i) {
            if (scaled[i].pred_label != records[i].pred_label) {
                require(fails, false,
                        "temperature flipped a pred_label on trial " + std::to_string(trial));
                return;
            }
        }
        require(fails,
                before.tp == after.tp && before.fp == after.fp && before.tn == after.tn &&
                    before.fn == after.fn,
                "temperature changed a confusion count on trial " + std::to_string(trial));
        require(fails, std::abs(auc(scaled) - auc(records)) <= 1e-12,
                "temperature changed AUC on trial " + std::to_string(trial));

        const PlattParams platt = fit_platt(records);
        if (platt.alpha > 0.0) {
            const auto mapped = apply_platt(platt, records);
            require(fails, std::abs(auc(mapped) - auc(records)) <= 1e-12,
                    "platt (alpha > 0) changed AUC on trial " + std::to_string(trial));
        }
        if (!fails.empty()) return;
    }
}

// ---------------------------------------------------------------- 7 ----
void criterion_statistical_tests(Failures& fails) {
    const TestResult t = paired_t_test({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
    require(fails, std::abs(t.statistic - 3.4641) <= 1e-3,
            "paired t statistic " + fmt(t.statistic) + " not within 1e-3 of 3.4641");
    require(fails, std::abs(t.p_value - 0.0742) <= 1e-3,
            "paired t p " + fmt(t.p_value) + " not within 1e-3 of 0.0742");

    const TestResult w = wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 0, 0});
    require(fails, w.p_value == 0.03125, "exact Wilcoxon p " + fmt(w.p_value) + " != 0.03125");

    const auto samples = synth::stats_oracle_samples();
    int agreements = 0, total = 0;
    for (const auto& frozen : oracles::kNormalityVerdicts) {
        for (const auto& sample : samples) {
            if (sample.name != frozen.name) continue;
            const double p = sample.n >= 50 ? dagostino_pearson(sample.values)
                                            : monte_carlo_normality(sample.values, 555);
            if ((p < 0.05) == frozen.reject_normality) ++agreements;
            ++total;
        }
    }
    require(fails, total == 20, "expected 20 oracle samples, saw " + std::to_string(total));
    require(fails, agreements >= 19,
            "only " + std::to_string(agreements) + "/20 verdicts match the reference");
}

// ---------------------------------------------------------------- 8 ----
void criterion_protocol_shape(Failures& fails) {
    const auto start = Clock::now();
    Rng rng(9008);
    const auto train = synth::synth_commits(12000, rng);
    const auto test = synth::synth_commits(2000, rng);

    ProtocolConfig config;
    config.k = 10;
    config.repetitions = 10;
    config.seed = 77;

    const MeasurementTable rq1 = run_rq1(train, test, config);
    const MeasurementTable rq2_platt = run_rq2(train, test, config, CalibrationMethod::Platt);
    const MeasurementTable rq2_temp = run_rq2(train, test, config, CalibrationMethod::Temperature);

    for (const MeasurementTable* table : {&rq1, &rq2_platt, &rq2_temp}) {
        for (const auto& cfg : table->binnings) {
            std::size_t rows = 0;
            for (const auto& rec : table->rows) {
                if (rec.binning == cfg) ++rows;
            }
            if (rows != 110) {
                require(fails, false,
                        method_name(table->method) + " " + schema_name(cfg.schema) +
                            std::to_string(cfg.count) + " has " + std::to_string(rows) +
                            " rows, expected 110");
            }
        }
    }

    for (int v = 0; v < config.k; ++v) {
        const Rq2Roles roles = rq2_roles(config.k, v);
        bool disjoint = roles.validation != roles.calibration;
        for (int f : roles.training) {
            disjoint = disjoint && f != roles.validation && f != roles.calibration;
        }
        require(fails, disjoint && static_cast<int>(roles.training.size()) == config.k - 2,
                "fold roles overlap for validation fold " + std::to_string(v));
    }

    const MeasurementTable rq1_again = run_rq1(train, test, config);
    std::ostringstream a, b;
    write_measurements_csv(a, rq1);
    write_measurements_csv(b, rq1_again);
    require(fails, a.str() == b.str(), "two same-seed RQ1 runs produced different CSV bytes");

    const MeasurementTable rq2_again = run_rq2(train, test, config, CalibrationMethod::Platt);
    std::ostringstream c, d;
    write_measurements_csv(c, rq2_platt);
    write_measurements_csv(d, rq2_again);
    require(fails, c.str() == d.str(), "two same-seed RQ2 runs produced different CSV bytes");

    const double elapsed = seconds_since(start);
    require(fails, elapsed < 60.0, "desk-scale run took " + fmt(elapsed) + "s (limit 60s)");
}

// ---------------------------------------------------------------- 9 ----
void criterion_conditional_replication(Failures& fails, std::string& note) {
    // structural half: externally produced prediction exports must flow
    // through the full experiment and report pipeline
    Rng rng(9009);
    const auto pool = synth::logistic_records(5000, rng, -5.0, 3.0, 1.0, -0.8, 1.8);
    const auto test = synth::logistic_records(1200, rng, -5.0, 3.0, 1.0, -0.8, 1.8);

    ProtocolConfig config;
    config.k = 10;
    config.repetitions = 10;
    config.seed = 5;

    const MeasurementTable before = run_rq1_external(pool, test, config);
    const MeasurementTable after = run_rq2_external(pool, test, config, CalibrationMethod::Platt);
    for (const MeasurementTable* table : {&before, &after}) {
        for (const auto& cfg : table->binnings) {
            std::size_t rows = 0;
            for (const auto& rec : table->rows) {
                if (rec.binning == cfg) ++rows;
            }
            require(fails, rows == 110,
                    "external table has " + std::to_string(rows) + " rows per config");
        }
    }
    const auto comparison = compare(before, after, 5);
    const std::string table_text = render_comparison_table(comparison, "OG", "platt");
    require(fails, table_text.find("Test_Avg (OG)") != std::string::npos,
            "comparison table lacks the Test_Avg row");
    require(fails, table_text.find("Val. Min-Max (OG)") != std::string::npos,
            "comparison table lacks the Val. Min-Max row");
    require(fails, table_text.find("Stat. Sign.") != std::string::npos,
            "comparison table lacks the Stat. Sign. row");

    // replication half: only when the public commit CSVs are supplied
    const char* env = std::getenv("JITCAL_DATA_DIR");
    const fs::path data_dir = env ? fs::path(env) : fs::path("data");
    struct DatasetSpec {
        const char* train;
        const char* test;
        double auc_target;
        double precision_target, precision_tol;
        double recall_target, recall_tol;
        double ece_target;
    };
    const DatasetSpec specs[] = {
        {"openstack_train.csv", "openstack_test.csv", 0.75, 0.68, 0.05, 0.078, 0.03, 0.09},
        {"qt_train.csv", "qt_test.csv", 0.74, -1.0, 0.0, -1.0, 0.0, 0.03},
    };
    bool any_data = false;
    for (const auto& spec : specs) {
        const fs::path train_path = data_dir / spec.train;
        const fs::path test_path = data_dir / spec.test;
        if (!fs::exists(train_path) || !fs::exists(test_path)) continue;
        any_data = true;

        const auto train = load_commits_file(train_path.string());
        const auto test_set = load_commits_file(test_path.string());
        if (std::string(spec.train).rfind("qt_", 0) == 0) {
            require(fails, train.size() == 22579,
                    "qt_train.csv has " + std::to_string(train.size()) +
                        " instances, expected 22579");
            require(fails, test_set.size() == 2571,
                    "qt_test.csv has " + std::to_string(test_set.size()) +
                        " instances, expected 2571");
        }
        const MeasurementTable table = run_rq1(train, test_set, config);

        double auc_sum = 0, prec_sum = 0, rec_sum = 0, ece_sum = 0;
        std::size_t n_test = 0, n_prec = 0;
        const BinningConfig eq15{15, BinningSchema::Equiwidth};
        for (const auto& rec : table.rows) {
            if (rec.phase != Phase::Test || !(rec.binning == eq15)) continue;
            ++n_test;
            if (rec.auc) auc_sum += *rec.auc;
            if (rec.precision) {
                prec_sum += *rec.precision;
                ++n_prec;
            }
            if (rec.recall) rec_sum += *rec.recall;
            ece_sum += rec.ece;
        }
        require(fails, n_test > 0, std::string(spec.train) + ": no test rows");
        if (n_test == 0) continue;
        const double mean_auc = auc_sum / n_test;
        const double mean_ece = ece_sum / n_test;
        require(fails, std::abs(mean_auc - spec.auc_target) <= 0.03,
                std::string(spec.train) + ": AUC " + fmt(mean_auc) + " vs " +
                    fmt(spec.auc_target) + " +/- 0.03");
        require(fails, std::abs(mean_ece - spec.ece_target) <= 0.04,
                std::string(spec.train) + ": eq15 ECE " + fmt(mean_ece) + " vs " +
                    fmt(spec.ece_target) + " +/- 0.04");
        if (spec.precision_target >= 0.0 && n_prec > 0) {
            const double mean_prec = prec_sum / n_prec;
            const double mean_rec = rec_sum / n_test;
            require(fails, std::abs(mean_prec - spec.precision_target) <= spec.precision_tol,
                    std::string(spec.train) + ": precision " + fmt(mean_prec));
            require(fails, std::abs(mean_rec - spec.recall_target) <= spec.recall_tol,
                    std::string(spec.train) + ": recall " + fmt(mean_rec));
        }
    }
    if (!any_data) {
        note = " (structural only; QT/OPENSTACK CSVs not supplied, replication skipped)";
    }
}

// --------------------------------------------------------------- 10 ----
void criterion_figure_fidelity(Failures& fails) {
    const auto& s = sharpened_setup();
    const BinningConfig eq15{15, BinningSchema::Equiwidth};
    const std::vector<ReliabilityCurve> curves{
        {"original", reliability_series(bin_statistics(s.eval, eq15))},
        {"platt", reliability_series(bin_statistics(s.eval_platt, eq15))},
    };

    // emit the figure and its CSV companion, then assert on the CSV text
    {
        std::ofstream svg(out_dir() / "criterion5_reliability.svg");
        write_reliability_svg(svg, curves, "Reliability (sharpened predictor)");
    }
    std::ostringstream csv;
    write_reliability_csv(csv, curves);
    {
        std::ofstream file(out_dir() / "criterion5_reliability.csv");
        file << csv.str();
    }

    struct Row {
        std::string curve;
        double confidence = 0.0, accuracy = 0.0;
        std::size_t members = 0;
    };
    std::vector<Row> rows;
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        Row row;
        const std::size_t p0 = line.find(',');
        const std::size_t p1 = line.find(',', p0 + 1);
        const std::size_t p2 = line.find(',', p1 + 1);
        const std::size_t p3 = line.find(',', p2 + 1);
        row.curve = line.substr(0, p0);
        row.confidence = std::stod(line.substr(p1 + 1, p2 - p1 - 1));
        row.accuracy = std::stod(line.substr(p2 + 1, p3 - p2 - 1));
        row.members = static_cast<std::size_t>(std::stoull(line.substr(p3 + 1)));
        rows.push_back(row);
    }

    std::size_t platt_total = 0;
    for (const auto& row : rows) {
        if (row.curve == "platt") platt_total += row.members;
    }
    require(fails, platt_total > 0, "no platt points in the emitted CSV");

    for (const auto& row : rows) {
        if (row.curve == "original" && row.confidence > 0.5) {
            require(fails, row.accuracy < row.confidence,
                    "uncalibrated bin at confidence " + fmt(row.confidence) +
                        " is not below the diagonal (accuracy " + fmt(row.accuracy) + ")");
        }
        if (row.curve == "platt" &&
            static_cast<double>(row.members) >= 0.05 * static_cast<double>(platt_total)) {
            require(fails, std::abs(row.accuracy - row.confidence) <= 0.1,
                    "platt bin at confidence " + fmt(row.confidence) + " deviates by " +
                        fmt(std::abs(row.accuracy - row.confidence)));
        }
    }
}

} // namespace

int main() {
    struct Criterion {
        int index;
        std::string title;
        std::function<void(Failures&, std::string&)> run;
    };
    const auto plain = [](void (*fn)(Failures&)) {
        return [fn](Failures& fails, std::string&) { fn(fails); };
    };

    const std::vector<Criterion> criteria{
        {1, "metric oracle equivalence (1000 instances, 1e-12, <5s)",
         plain(criterion_metric_oracle)},
        {2, "hand-computed instance: ECE 0.25, MCE 0.30, Brier 0.15",
         plain(criterion_hand_instance)},
        {3, "ECE <= MCE everywhere; Brier binning-invariant to 1e-15",
         plain(criterion_invariants)},
        {4, "recalibration recovery: Platt (2,1) +/-0.15, temperature 2 +/-0.1, <2s each",
         plain(criterion_recalibration_recovery)},
        {5, "Platt halves the sharpened-predictor ECE; temperature cuts 30%",
         plain(criterion_miscalibration_reduction)},
        {6, "temperature preserves decisions; both methods preserve AUC",
         plain(criterion_decision_invariance)},
        {7, "statistical tests match oracles and the reference implementation",
         plain(criterion_statistical_tests)},
        {8, "protocol shape: 110 rows per config, disjoint roles, byte-identical reruns, <60s",
         plain(criterion_protocol_shape)},
        {9, "conditional replication and structural export acceptance",
         criterion_conditional_replication},
        {10, "figure fidelity on the emitted reliability CSV", plain(criterion_figure_fidelity)},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        Failures fails;
        std::string note;
        try {
            criterion.run(fails, note);
        } catch (const std::exception& e) {
            fails.push_back(std::string("exception: ") + e.what());
        }
        if (fails.empty()) {
            std::cout << "criterion " << criterion.index << ": PASS - " << criterion.title << note
                      << '\n';
        } else {
            ++failed;
            std::cout << "criterion " << criterion.index << ": FAIL - " << criterion.title << '\n';
            for (const auto& reason : fails) std::cout << "    " << reason << '\n';
        }
    }
    return failed;
}

#include <benchmark/benchmark.h>

#include <vector>

#include "jitcal/binning.hpp"
#include "jitcal/dataset.hpp"
#include "jitcal/metrics.hpp"
#include "jitcal/predictor.hpp"
#include "jitcal/recalibration.hpp"
#include "jitcal/rng.hpp"

namespace {

std::vector<jitcal::PredictionRecord> make_records(std::size_t n) {
    jitcal::Rng rng(1);
    std::vector<jitcal::PredictionRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        jitcal::PredictionRecord rec;
        rec.logit = -4.0 + 8.0 * rng.uniform();
        rec.prob = jitcal::sigmoid(rec.logit);
        rec.true_label = rng.bernoulli(rec.prob);
        rec.pred_label = rec.prob >= 0.5 ? 1 : 0;
        out.push_back(rec);
    }
    return out;
}

std::vector<jitcal::LabeledInstance> make_commits(std::size_t n) {
    jitcal::Rng rng(2);
    std::vector<jitcal::LabeledInstance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        jitcal::LabeledInstance inst;
        inst.id = std::to_string(i);
        const double la = rng.exponential() * 50.0;
        inst.features["la"] = la;
        inst.label = rng.bernoulli(jitcal::sigmoid(0.03 * la - 2.2));
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace

static void BM_BinStatisticsEquiwidth(benchmark::State& state) {
    const auto records = make_records(static_cast<std::size_t>(state.range(0)));
    const jitcal::BinningConfig cfg{15, jitcal::BinningSchema::Equiwidth};
    for (auto _ : state) {
        auto bins = jitcal::bin_statistics(records, cfg);
        benchmark::DoNotOptimize(bins);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BinStatisticsEquiwidth)->Range(1 << 10, 1 << 17)->Complexity();

static void BM_BinStatisticsAdaptive(benchmark::State& state) {
    const auto records = make_records(static_cast<std::size_t>(state.range(0)));
    const jitcal::BinningConfig cfg{50, jitcal::BinningSchema::Adaptive};
    for (auto _ : state) {
        auto bins = jitcal::bin_statistics(records, cfg);
        benchmark::DoNotOptimize(bins);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BinStatisticsAdaptive)->Range(1 << 10, 1 << 17)->Complexity();

static void BM_CalibrationReport(benchmark::State& state) {
    const auto records = make_records(static_cast<std::size_t>(state.range(0)));
    const jitcal::BinningConfig cfg{15, jitcal::BinningSchema::Equiwidth};
    for (auto _ : state) {
        auto report = jitcal::calibration_report(records, cfg);
        benchmark::DoNotOptimize(report);
    }
}
BENCHMARK(BM_CalibrationReport)->Arg(1 << 14);

static void BM_Auc(benchmark::State& state) {
    const auto records = make_records(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(jitcal::auc(records));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auc)->Range(1 << 10, 1 << 17)->Complexity();

static void BM_FitPlatt(benchmark::State& state) {
    const auto records = make_records(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto params = jitcal::fit_platt(records);
        benchmark::DoNotOptimize(params);
    }
}
BENCHMARK(BM_FitPlatt)->Arg(10000);

static void BM_FitTemperature(benchmark::State& state) {
    const auto records = make_records(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto param = jitcal::fit_temperature(records);
        benchmark::DoNotOptimize(param);
    }
}
BENCHMARK(BM_FitTemperature)->Arg(10000);

static void BM_TrainLogReg(benchmark::State& state) {
    const auto commits = make_commits(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto model = jitcal::train_logreg(commits);
        benchmark::DoNotOptimize(model);
    }
}
BENCHMARK(BM_TrainLogReg)->Arg(20000);

BENCHMARK_MAIN();

#include <doctest.h>

#include <cmath>

#include "jitcal/errors.hpp"
#include "jitcal/metrics.hpp"
#include "jitcal/recalibration.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace jitcal;

namespace {

std::vector<PredictionRecord> single_record(double logit, int label) {
    PredictionRecord rec;
    rec.logit = logit;
    rec.prob = sigmoid(logit);
    rec.true_label = label;
    rec.pred_label = rec.prob >= 0.5 ? 1 : 0;
    return {rec};
}

} // namespace

TEST_CASE("nll analytic values") {
    CHECK(nll({1.0}, {1}) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(nll({0.5}, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(nll({0.0}, {1}) == doctest::Approx(27.631).epsilon(1e-4));
    CHECK(std::isfinite(nll({0.0, 1.0}, {1, 0})));
    CHECK_THROWS_AS(nll({}, {}), UndefinedInputError);
    CHECK_THROWS_AS(nll({0.5}, {1, 0}), UndefinedInputError);
}

TEST_CASE("fit_platt recovers identity parameters") {
    Rng rng(101);
    const auto cal = synth::logistic_records(10000, rng, -4.0, 4.0, 1.0, 0.0);
    const PlattParams params = fit_platt(cal);
    CHECK(params.converged);
    CHECK(params.alpha == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(params.beta) < 0.1);

    const auto grid = oracles::platt_grid_minimizer(cal, 0.5, 1.5, -0.5, 0.5, 20);
    CHECK(params.final_nll <= grid.nll + 1e-9);
    CHECK(std::abs(grid.alpha - params.alpha) <= 0.06);
    CHECK(std::abs(grid.beta - params.beta) <= 0.06);
}

TEST_CASE("fit_platt recovers (2, 1)") {
    Rng rng(102);
    const auto cal = synth::logistic_records(10000, rng, -4.0, 4.0, 2.0, 1.0);
    const PlattParams params = fit_platt(cal);
    CHECK(params.alpha == doctest::Approx(2.0).epsilon(0.075));
    CHECK(params.beta == doctest::Approx(1.0).epsilon(0.15));
    const auto grid = oracles::platt_grid_minimizer(cal, 1.5, 2.5, 0.5, 1.5, 20);
    CHECK(params.final_nll <= grid.nll + 1e-9);
}

TEST_CASE("fit_platt rejects one-class folds") {
    Rng rng(103);
    auto cal = synth::logistic_records(100, rng, -4.0, 4.0, 1.0, 0.0);
    for (auto& rec : cal) rec.true_label = 1;
    CHECK_THROWS_AS(fit_platt(cal), FitError);
}

TEST_CASE("fit_platt handles constant logits via the ridge fallback") {
    std::vector<PredictionRecord> cal;
    for (int i = 0; i < 40; ++i) {
        auto rec = single_record(0.7, i % 3 == 0 ? 1 : 0)[0];
        cal.push_back(rec);
    }
    const PlattParams params = fit_platt(cal);
    CHECK(std::isfinite(params.alpha));
    CHECK(std::isfinite(params.beta));
}

TEST_CASE("nll decreases monotonically along the Platt fit") {
    Rng rng(104);
    const auto cal = synth::logistic_records(2000, rng, -4.0, 4.0, 3.0, -0.5);
    std::vector<double> trace;
    fit_platt(cal, &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] < trace[i - 1]);
}

TEST_CASE("apply_platt evaluates the logistic map") {
    const PlattParams identity{1.0, 0.0, true, 0, 0.0};
    CHECK(apply_platt(identity, single_record(0.0, 1))[0].prob == 0.5);

    const PlattParams shifted{2.0, 1.0, true, 0, 0.0};
    CHECK(apply_platt(shifted, single_record(0.0, 1))[0].prob ==
          doctest::Approx(0.7310585786300049).epsilon(1e-12));

    Rng rng(105);
    const auto records = synth::logistic_records(50, rng, -3.0, 3.0, 1.0, 0.0);
    const auto mapped = apply_platt(identity, records);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(mapped[i].prob == records[i].prob);
        CHECK(mapped[i].pred_label == records[i].pred_label);
        CHECK(mapped[i].true_label == records[i].true_label);
    }
}

TEST_CASE("fit_temperature recovers T=2 and T=1") {
    Rng rng(106);
    const auto cooled = synth::logistic_records(10000, rng, -4.0, 4.0, 0.5, 0.0);
    const TemperatureParam t2 = fit_temperature(cooled);
    CHECK(t2.converged);
    CHECK(t2.t == doctest::Approx(2.0).epsilon(0.05));
    const auto grid2 = oracles::temperature_grid_minimizer(cooled, 1.0, 4.0, 120);
    CHECK(t2.final_nll <= grid2.nll + 1e-9);
    CHECK(std::abs(grid2.alpha - t2.t) <= 0.05);

    Rng rng2(107);
    const auto identity = synth::logistic_records(10000, rng2, -4.0, 4.0, 1.0, 0.0);
    const TemperatureParam t1 = fit_temperature(identity);
    CHECK(t1.t == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fit_temperature rejects one-class folds") {
    Rng rng(108);
    auto cal = synth::logistic_records(100, rng, -4.0, 4.0, 1.0, 0.0);
    for (auto& rec : cal) rec.true_label = 1;
    CHECK_THROWS_AS(fit_temperature(cal), FitError);
}

TEST_CASE("apply_temperature evaluates the scaled sigmoid") {
    const TemperatureParam identity{1.0, true, 0, 0.0};
    Rng rng(109);
    const auto records = synth::logistic_records(50, rng, -3.0, 3.0, 1.0, 0.0);
    const auto same = apply_temperature(identity, records);
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(same[i].prob == records[i].prob);

    const TemperatureParam two{2.0, true, 0, 0.0};
    CHECK(apply_temperature(two, single_record(2.0, 1))[0].prob ==
          doctest::Approx(0.7310585786300049).epsilon(1e-12));

    const TemperatureParam max_bound{100.0, false, 0, 0.0};
    CHECK(apply_temperature(max_bound, single_record(3.0, 1))[0].prob ==
          doctest::Approx(0.5075).epsilon(1e-3));
    CHECK(apply_temperature(max_bound, single_record(-3.0, 0))[0].prob ==
          doctest::Approx(0.4925).epsilon(1e-3));

    CHECK_THROWS_AS(apply_temperature({0.0, false, 0, 0.0}, records), ValidationError);
}

TEST_CASE("temperature scaling preserves every decision") {
    Rng rng(110);
    for (int trial = 0; trial < 10; ++trial) {
        const auto records = synth::logistic_records(300, rng, -5.0, 5.0, 1.3, -0.4);
        const TemperatureParam param = fit_temperature(records);
        const auto scaled = apply_temperature(param, records);
        const auto before = confusion(records);
        const auto after = confusion(scaled);
        CHECK(before.tp == after.tp);
        CHECK(before.fp == after.fp);
        CHECK(before.tn == after.tn);
        CHECK(before.fn == after.fn);
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(scaled[i].pred_label == records[i].pred_label);
        }
        CHECK(auc(scaled) == doctest::Approx(auc(records)).epsilon(1e-12));
    }
}

TEST_CASE("platt scaling keeps AUC but can flip labels") {
    Rng rng(111);
    // model logits carry an uncorrected -2 shift; the fitted beta pulls
    // mid-range records below the 0.5 line
    const auto cal = synth::logistic_records(5000, rng, -4.0, 4.0, 1.0, -2.0);
    const PlattParams params = fit_platt(cal);
    CHECK(params.alpha > 0.0);
    CHECK(params.beta < -1.0);

    const auto target = synth::logistic_records(2000, rng, -4.0, 4.0, 1.0, -2.0);
    const auto mapped = apply_platt(params, target);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (mapped[i].pred_label != target[i].pred_label) ++flips;
    }
    CHECK(flips > 0);
    CHECK(auc(mapped) == doctest::Approx(auc(target)).epsilon(1e-12));
}

TEST_CASE("fitted parameters never lose to the identity on the fold") {
    Rng rng(112);
    const auto cal = synth::logistic_records(3000, rng, -4.0, 4.0, 0.6, 0.8);
    std::vector<double> probs(cal.size());
    std::vector<int> labels(cal.size());
    for (std::size_t i = 0; i < cal.size(); ++i) {
        probs[i] = cal[i].prob;
        labels[i] = cal[i].true_label;
    }
    const double identity_nll = nll(probs, labels);

    const PlattParams platt = fit_platt(cal);
    const auto platt_mapped = apply_platt(platt, cal);
    for (std::size_t i = 0; i < cal.size(); ++i) probs[i] = platt_mapped[i].prob;
    CHECK(nll(probs, labels) <= identity_nll + 1e-12);

    const TemperatureParam temp = fit_temperature(cal);
    const auto temp_mapped = apply_temperature(temp, cal);
    for (std::size_t i = 0; i < cal.size(); ++i) probs[i] = temp_mapped[i].prob;
    CHECK(nll(probs, labels) <= identity_nll + 1e-12);
}

TEST_CASE("calibrator JSON round-trips") {
    const Calibrator platt = PlattParams{1.5, -0.25, true, 12, 0.41};
    const Calibrator back = calibrator_from_json(calibrator_to_json(platt));
    REQUIRE(std::holds_alternative<PlattParams>(back));
    CHECK(std::get<PlattParams>(back).alpha == 1.5);
    CHECK(std::get<PlattParams>(back).beta == -0.25);

    const Calibrator temp = TemperatureParam{2.5, true, 6, 0.3};
    const Calibrator back2 = calibrator_from_json(calibrator_to_json(temp));
    REQUIRE(std::holds_alternative<TemperatureParam>(back2));
    CHECK(std::get<TemperatureParam>(back2).t == 2.5);

    CHECK_THROWS_AS(calibrator_from_json("{\"method\":\"unknown\"}"), ParseError);
    CHECK_THROWS_AS(calibrator_from_json("not json"), ParseError);
}

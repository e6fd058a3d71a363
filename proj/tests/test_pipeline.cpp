#include <doctest.h>

#include "snnrfi/errors.hpp"
#include "snnrfi/generator.hpp"
#include "snnrfi/pipeline.hpp"

using namespace snnrfi;

namespace {

Dataset toy_dataset(std::size_t freq = 64, std::size_t time = 64) {
    GeneratorConfig cfg;
    cfg.n_train = 3;
    cfg.n_test = 2;
    cfg.freq_channels = freq;
    cfg.time_steps = time;
    cfg.contamination_tolerance = 0.2;
    cfg.seed = 12;
    return generate_dataset(cfg);
}

RunOptions quick() {
    RunOptions o;
    o.epoch_cap = 2;
    return o;
}

ExperimentParams params_for(const std::string& method) {
    ExperimentParams p = ExperimentParams::for_method(method);
    p.batch_size = 16;
    p.epochs = 5;
    p.exposure = 3;
    return p;
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

TEST_CASE("method names") {
    for (const char* name : {"latency", "rate", "delta", "sf-first", "sf-direct", "sf-latency", "ann"})
        CHECK(ExperimentParams::for_method(name).method_name() == name);
    CHECK(ExperimentParams::for_method("ann").model == ModelKind::ann);
    CHECK_THROWS_AS(ExperimentParams::for_method("morse"), ConfigError);
}

TEST_CASE("patches and predictions keep the spectrogram shape") {
    const Dataset ds = toy_dataset(40, 70);
    CHECK(dataset_patches(ds.train, 32).size() == 3 * 2 * 3);

    const Network silent(NetworkConfig::for_method(EncodingMethod::latency, 0.7));
    const ExperimentParams p = params_for("latency");
    const Prediction pred = predict(silent, ds.test, encoding_config(p, 0), 32);
    REQUIRE(pred.masks.size() == 2);
    CHECK(pred.masks[0].flags.rows() == 40);
    CHECK(pred.masks[0].flags.cols() == 70);
    CHECK(pred.masks[0].count() == 0);

    // A network that never fires scores exactly like the silent baseline.
    const EvalRecord a = evaluate_predictions(pred, ds.test);
    const EvalRecord b = evaluate_predictions(predict_silent(ds.test), ds.test);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.n_pixels == 2 * 40 * 70);
    const std::vector<RFIMask> masks{ds.test[0].mask, ds.test[1].mask};
    CHECK(b.accuracy == doctest::Approx(1.0 - contamination_stats(masks)));
    CHECK(b.f1 == 0.0);
    if (b.auroc) CHECK(*b.auroc == doctest::Approx(0.5));
}

TEST_CASE("evaluate_predictions checks shapes") {
    const Dataset ds = toy_dataset();
    Prediction pred = predict_silent(ds.test);
    pred.masks.pop_back();
    CHECK_THROWS_AS(evaluate_predictions(pred, ds.test), ShapeError);
    pred = predict_silent(ds.test);
    pred.scores[0] = Grid<double>(3, 3, 0.0);
    CHECK_THROWS_AS(evaluate_predictions(pred, ds.test), ShapeError);
}

TEST_CASE("every method trains and evaluates") {
    const Dataset ds = toy_dataset();
    for (const char* name : {"latency", "rate", "delta", "sf-first", "sf-direct", "sf-latency", "ann"}) {
        CAPTURE(name);
        const RunResult r = run_experiment(ds, params_for(name), 3, quick());
        CHECK(r.history.epochs.size() <= 2);
        CHECK(r.network.all_finite());
        CHECK(in_unit(r.metrics.accuracy));
        CHECK(in_unit(r.metrics.f1));
        if (r.metrics.auroc) CHECK(in_unit(*r.metrics.auroc));
        CHECK(r.metrics.n_pixels == 2 * 64 * 64);
    }
}

TEST_CASE("runs are reproducible from the seed") {
    const Dataset ds = toy_dataset();
    for (const char* name : {"latency", "rate"}) {
        const RunResult a = run_experiment(ds, params_for(name), 8, quick());
        const RunResult b = run_experiment(ds, params_for(name), 8, quick());
        CHECK(a.network == b.network);
        CHECK(a.metrics.accuracy == b.metrics.accuracy);
        CHECK(a.metrics.auroc == b.metrics.auroc);
        const RunResult c = run_experiment(ds, params_for(name), 9, quick());
        CHECK_FALSE(a.network == c.network);
    }
}

TEST_CASE("option caps") {
    const Dataset ds = toy_dataset();
    RunOptions o = quick();
    o.epoch_cap = 1;
    o.max_train_patches = 4;
    const TrainedModel m = train_model(ds.train, params_for("latency"), 1, o);
    CHECK(m.history.epochs.size() == 1);
    CHECK(training_config(params_for("latency"), 1, RunOptions{}).max_epochs == 5);
    CHECK(encoding_config(params_for("delta"), 1).exposure == 1);
    CHECK_THROWS_AS(run_experiment(Dataset{}, params_for("latency"), 1, o), DataError);
}

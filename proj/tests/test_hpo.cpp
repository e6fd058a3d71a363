#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "snnrfi/errors.hpp"
#include "snnrfi/generator.hpp"
#include "snnrfi/hpo.hpp"
#include "tmpdir.hpp"

using namespace snnrfi;

namespace {

Dataset toy_dataset() {
    GeneratorConfig cfg;
    cfg.n_train = 2;
    cfg.n_test = 1;
    cfg.freq_channels = 32;
    cfg.time_steps = 32;
    cfg.contamination_tolerance = 0.2;
    cfg.seed = 4;
    return generate_dataset(cfg);
}

RunOptions one_epoch() {
    RunOptions o;
    o.epoch_cap = 1;
    return o;
}

EvalRecord rec(double acc, std::optional<double> roc, std::optional<double> prc, double f1) {
    EvalRecord r;
    r.accuracy = acc;
    r.auroc = roc;
    r.auprc = prc;
    r.f1 = f1;
    r.n_pixels = 10;
    return r;
}

TrialRecord trial(std::size_t index, std::optional<EvalRecord> m) {
    TrialRecord t;
    t.index = index;
    t.metrics = m;
    if (!m) t.error = "non-finite loss";
    return t;
}

std::vector<double> point(const EvalRecord& r) {
    std::vector<double> p;
    for (Metric m : kAllMetrics) p.push_back(metric_value(r, m));
    return p;
}

}  // namespace

TEST_CASE("sample_trial stays in range") {
    std::mt19937_64 rng(1);
    double beta_sum = 0.0;
    std::set<int> exposures;
    for (int k = 0; k < 10000; ++k) {
        const ExperimentParams p = sample_trial(rng, "rate");
        CHECK(p.batch_size >= 16);
        CHECK(p.batch_size <= 128);
        CHECK(p.epochs >= 5);
        CHECK(p.epochs <= 100);
        CHECK(p.beta >= 0.5);
        CHECK(p.beta <= 0.99);
        CHECK(p.exposure >= 1);
        CHECK(p.exposure <= 64);
        exposures.insert(p.exposure);
        beta_sum += p.beta;
    }
    CHECK(std::abs(beta_sum / 10000 - 0.745) < 0.01);
    CHECK(exposures.size() == 64);
}

TEST_CASE("sample_trial is a pure function of seed and index") {
    for (std::size_t i = 0; i < 20; ++i) {
        const ExperimentParams a = sample_trial(9, i, "latency");
        const ExperimentParams b = sample_trial(9, i, "latency");
        CHECK(a.batch_size == b.batch_size);
        CHECK(a.beta == b.beta);
        CHECK(a.exposure == b.exposure);
        CHECK(a.exposure >= 2);
        CHECK(a.encoding == EncodingMethod::latency);
    }
    CHECK(sample_trial(9, 0, "latency").beta != sample_trial(10, 0, "latency").beta);
    CHECK(sample_trial(1, 0, "ann").model == ModelKind::ann);
}

TEST_CASE("range validation") {
    ParamRanges r;
    CHECK_NOTHROW(r.validate());
    CHECK(ParamRanges::for_method(r, "sf-first").exposure_min == 2);
    CHECK(ParamRanges::for_method(r, "sf-direct").exposure_min == 1);
    r.epochs_max = 4;
    CHECK_THROWS_AS(r.validate(), ConfigError);
    r = ParamRanges{};
    r.beta_max = 1.2;
    CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("trial records round trip as json lines") {
    TrialRecord ok = trial(3, rec(0.9, 0.8, std::nullopt, 0.5));
    ok.params = sample_trial(2, 3, "delta");
    ok.seed = 77;
    ok.wall_time_seconds = 1.5;
    const TrialRecord back = trial_from_json_line(to_json_line(ok));
    CHECK(back.index == 3);
    CHECK(back.seed == 77);
    CHECK(back.params.encoding == EncodingMethod::delta);
    CHECK(back.params.beta == ok.params.beta);
    REQUIRE(back.ok());
    CHECK(back.metrics->auroc == 0.8);
    CHECK_FALSE(back.metrics->auprc.has_value());
    CHECK(to_json_line(ok).find("\"exposure\":null") != std::string::npos);

    const TrialRecord failed = trial_from_json_line(to_json_line(trial(4, std::nullopt)));
    CHECK_FALSE(failed.ok());
    CHECK(failed.error == "non-finite loss");

    SUBCASE("store tolerates a torn final line only") {
        test::TempDir dir("records");
        append_trial_record(dir / "t.jsonl", ok);
        append_trial_record(dir / "t.jsonl", trial(4, std::nullopt));
        {
            std::ofstream out(dir / "t.jsonl", std::ios::app);
            out << "{\"index\": 5, \"meth";
        }
        CHECK(read_trial_records(dir / "t.jsonl").size() == 2);
        std::string text = test::slurp(dir / "t.jsonl");
        test::spit(dir / "t.jsonl", "garbage\n" + text);
        CHECK_THROWS_AS(read_trial_records(dir / "t.jsonl"), FormatError);
    }
}

TEST_CASE("select_best") {
    SUBCASE("single trial wins everything") {
        const std::vector<TrialRecord> one{trial(0, rec(0.9, 0.7, 0.5, 0.4))};
        const Selection s = select_best(one);
        for (auto c : s.champions) CHECK(c == 0);
        CHECK(s.pareto_front == std::vector<std::size_t>{0});
    }
    SUBCASE("dominated trials leave the front") {
        const std::vector<TrialRecord> t{trial(0, rec(0.9, 0.7, 0.5, 0.4)), trial(1, rec(0.95, 0.8, 0.6, 0.5))};
        CHECK(select_best(t).pareto_front == std::vector<std::size_t>{1});
    }
    SUBCASE("ties go to the earlier trial") {
        const std::vector<TrialRecord> t{trial(0, rec(0.9, 0.7, 0.5, 0.4)), trial(1, rec(0.9, 0.7, 0.5, 0.4))};
        const Selection s = select_best(t);
        for (auto c : s.champions) CHECK(c == 0);
        CHECK(s.pareto_front == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("handcrafted records against the dominance oracle") {
        const std::vector<TrialRecord> t{
            trial(0, rec(0.97, 0.80, 0.50, 0.60)), trial(1, rec(0.98, 0.70, 0.55, 0.55)),
            trial(2, rec(0.96, 0.79, 0.49, 0.59)), trial(3, std::nullopt),
            trial(4, rec(0.99, std::nullopt, std::nullopt, 0.10)), trial(5, rec(0.97, 0.85, 0.40, 0.60))};
        const Selection s = select_best(t);
        std::vector<std::vector<double>> pts;
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i].ok()) {
                pts.push_back(point(*t[i].metrics));
                ok.push_back(i);
            }
        std::vector<std::size_t> expected;
        for (auto k : test::dominance_front(pts)) expected.push_back(ok[k]);
        CHECK(s.pareto_front == expected);
        CHECK(s.champions[0] == 4);
        CHECK(s.champions[1] == 5);
        CHECK(s.champions[2] == 1);
        CHECK(s.champions[3] == 0);
    }
    SUBCASE("nothing succeeded") {
        const std::vector<TrialRecord> t{trial(0, std::nullopt)};
        CHECK_THROWS_AS(select_best(t), TrainingError);
    }
}

TEST_CASE("statistics") {
    const std::vector<double> xs{0.91, 0.87, 0.95, 0.90, 0.88};
    const MetricStats s = describe(xs);
    const auto [mean, sd] = test::two_pass_stats(xs);
    CHECK(std::abs(s.mean - mean) < 1e-12);
    CHECK(std::abs(s.std - sd) < 1e-12);
    CHECK(s.min == 0.87);
    CHECK(s.max == 0.95);
    CHECK(describe(std::vector<double>{0.4}).std == 0.0);

    const std::vector<EvalRecord> same(3, rec(0.9, 0.8, 0.7, 0.6));
    const RepeatSummary r = summarize("latency", same);
    for (const auto& st : r.stats) CHECK(st.std == 0.0);
    CHECK(r.stats[static_cast<std::size_t>(Metric::auroc)].mean == doctest::Approx(0.8));

    const std::vector<EvalRecord> gaps{rec(0.9, std::nullopt, 0.7, 0.6), rec(0.8, 0.5, 0.6, 0.5)};
    const RepeatSummary g = summarize("rate", gaps);
    CHECK(g.stats[static_cast<std::size_t>(Metric::auroc)].n == 1);
    CHECK(g.stats[static_cast<std::size_t>(Metric::accuracy)].n == 2);
}

TEST_CASE("search runs, persists and resumes") {
    const Dataset ds = toy_dataset();
    test::TempDir dir("search");
    SearchConfig cfg;
    cfg.n_trials = 3;
    cfg.method = "latency";
    cfg.master_seed = 21;
    cfg.workers = 1;
    cfg.record_path = dir / "trials.jsonl";
    cfg.options = one_epoch();

    const auto first = run_search(ds, cfg);
    REQUIRE(first.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(first[i].index == i);
        CHECK(first[i].seed == 21 + i);
        CHECK(first[i].params.exposure >= 2);
        CHECK(first[i].params.batch_size >= 16);
    }

    // Drop the last record as if the run had been killed mid-way.
    std::string text = test::slurp(cfg.record_path);
    text.erase(text.find('\n', text.find('\n') + 1) + 1);
    test::spit(cfg.record_path, text);
    REQUIRE(read_trial_records(cfg.record_path).size() == 2);

    const auto resumed = run_search(ds, cfg);
    REQUIRE(resumed.size() == 3);
    const auto stored = read_trial_records(cfg.record_path);
    CHECK(stored.size() == 3);
    std::set<std::size_t> seen;
    for (const auto& r : stored) seen.insert(r.index);
    CHECK(seen.size() == 3);
    CHECK(resumed[2].params.beta == first[2].params.beta);
    CHECK(resumed[2].ok() == first[2].ok());
    if (first[2].ok()) CHECK(resumed[2].metrics->accuracy == first[2].metrics->accuracy);

    SUBCASE("more trials extend the same store") {
        cfg.n_trials = 4;
        CHECK(run_search(ds, cfg).size() == 4);
        CHECK(read_trial_records(cfg.record_path).size() == 4);
    }
    SUBCASE("a torn tail is cut before new records go in") {
        test::spit(cfg.record_path, test::slurp(cfg.record_path) + "{\"index\":3,\"meth");
        cfg.n_trials = 4;
        CHECK(run_search(ds, cfg).size() == 4);
        CHECK(read_trial_records(cfg.record_path).size() == 4);
        CHECK(test::slurp(cfg.record_path).find("\"meth\n") == std::string::npos);
    }
}

TEST_CASE("parallel search matches serial search") {
    const Dataset ds = toy_dataset();
    SearchConfig cfg;
    cfg.n_trials = 3;
    cfg.method = "delta";
    cfg.options = one_epoch();
    cfg.workers = 1;
    const auto serial = run_search(ds, cfg);
    cfg.workers = 3;
    const auto parallel = run_search(ds, cfg);
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(parallel[i].params.batch_size == serial[i].params.batch_size);
        REQUIRE(parallel[i].ok() == serial[i].ok());
        if (serial[i].ok()) CHECK(parallel[i].metrics->f1 == serial[i].metrics->f1);
    }
}

TEST_CASE("repeat_eval") {
    const Dataset ds = toy_dataset();
    ExperimentParams p = ExperimentParams::for_method("latency");
    p.batch_size = 16;
    p.epochs = 5;
    p.exposure = 3;
    const RepeatSummary r = repeat_eval(ds, p, 3, 40, one_epoch(), 1);
    CHECK(r.method == "latency");
    CHECK(r.seeds == std::vector<std::uint64_t>{40, 41, 42});
    REQUIRE(r.runs.size() == 3);
    std::vector<double> acc;
    for (const auto& run : r.runs) acc.push_back(run.accuracy);
    const auto& a = r.stats[static_cast<std::size_t>(Metric::accuracy)];
    CHECK(a.mean >= *std::min_element(acc.begin(), acc.end()));
    CHECK(a.mean <= *std::max_element(acc.begin(), acc.end()));
    CHECK(std::abs(a.std - test::two_pass_stats(acc).second) < 1e-12);

    CHECK(repeat_eval(ds, p, 1, 40, one_epoch(), 1).stats[0].std == 0.0);
}

TEST_CASE("report over metric files") {
    test::TempDir dir("report");
    const std::string header = metric_csv_header() + "\n";
    test::spit(dir / "a.csv", header + "rate,1,0.9,NA,NA,0.2\nlatency,1,0.98,0.9,0.7,0.75\n");
    test::spit(dir / "b.csv", header + "latency,2,0.96,0.86,0.6,0.65\nrate,2,0.92,NA,NA,0.1\n");
    test::spit(dir / "c.csv", header + "delta,1,0.95,0.8,0.5,0.55\n");
    std::vector<MetricRow> rows;
    for (const char* f : {"a.csv", "b.csv", "c.csv"})
        for (auto& r : read_metric_csv(dir / f)) rows.push_back(r);
    CHECK(rows.size() == 5);

    const std::string out = report_csv(rows);
    std::istringstream in(out);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0].rfind("method,n,accuracy_mean,accuracy_std", 0) == 0);
    CHECK(lines[1].rfind("delta,1,", 0) == 0);
    CHECK(lines[2].rfind("latency,2,", 0) == 0);
    CHECK(lines[3].rfind("rate,2,", 0) == 0);

    const auto [mean, sd] = test::two_pass_stats({0.98, 0.96});
    std::istringstream fields(lines[2]);
    std::vector<std::string> cells;
    while (std::getline(fields, line, ',')) cells.push_back(line);
    CHECK(std::stod(cells[2]) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(std::stod(cells[3]) == doctest::Approx(sd).epsilon(1e-9));
    CHECK(lines[3].find("NA") != std::string::npos);

    test::spit(dir / "bad.csv", "hello\n");
    CHECK_THROWS_AS(read_metric_csv(dir / "bad.csv"), FormatError);
}

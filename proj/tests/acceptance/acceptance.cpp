// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "snnrfi/errors.hpp"
#include "snnrfi/generator.hpp"
#include "snnrfi/hpo.hpp"
#include "snnrfi/losses.hpp"
#include "snnrfi/metrics.hpp"
#include "snnrfi/network.hpp"
#include "snnrfi/pipeline.hpp"
#include "tmpdir.hpp"

using namespace snnrfi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0 && secs > limit_seconds) {
        o.pass = false;
        o.detail += "; over the " + std::to_string(static_cast<int>(limit_seconds)) + " s limit";
    }
    if (!o.pass) ++failures;
    std::ostringstream line;
    line << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << ": " << name << " | " << o.detail << " | "
         << std::fixed;
    line.precision(1);
    line << secs << " s";
    std::cout << line.str() << std::endl;
}

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

std::string sci(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::scientific << v;
    return s.str();
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); }

// -- 1 -------------------------------------------------------------------------

Outcome encoders() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> exposure(2, 64);
    std::size_t bad = 0, checked = 0;
    for (int k = 0; k < 500; ++k) {
        const auto mask = test::random_mask(32, 32, 0.05 + 0.4 * (k % 10) / 10.0, 1000 + k);
        const int E = exposure(rng);

        // Latency: exactly one spike per channel and step, and the target round trip.
        const SpikeTrain lat = encode_latency(test::random_values(32, 32, 5000 + k), E);
        for (std::size_t c = 0; c < 32; ++c)
            for (std::size_t t = 0; t < 32; ++t) bad += lat.count(c, t) != 1;
        bad += !(decode_latency(encode_target_latency(mask, E)).flags == mask);

        // Rate: the exact-count rule for every E, and whole-spike trains where 0.8E and 0.2E are integers.
        const Grid<double> counts = encode_target_rate(mask, E);
        for (std::size_t c = 0; c < 32; ++c)
            for (std::size_t t = 0; t < 32; ++t) bad += (counts(c, t) > 0.75 * E) != (mask(c, t) == 1);
        const int E5 = 5 * (1 + k % 12);
        const Grid<double> whole = encode_target_rate(mask, E5);
        SpikeTrain out(32, 32, static_cast<std::size_t>(E5));
        for (std::size_t c = 0; c < 32; ++c)
            for (std::size_t t = 0; t < 32; ++t)
                for (std::size_t e = 0; e < static_cast<std::size_t>(std::llround(whole(c, t))); ++e) out.set(c, t, e);
        bad += !(decode_rate(out).flags == mask);

        // Delta.
        bad += !(decode_delta(encode_target_delta(mask)).flags == mask);
        checked += 4;
    }

    // Step-forward against the hand rule.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t sf_bad = 0;
    for (int k = 0; k < 500; ++k) {
        std::vector<double> x(32);
        // Mix smooth ramps and jumps.
        double level = u(rng);
        for (auto& v : x) {
            level = std::clamp(level + (u(rng) - 0.5) * (k % 2 ? 0.5 : 0.15), 0.0, 1.0);
            v = level;
        }
        sf_bad += step_forward_trace(x, 0.1) != test::step_forward_rule(x, 0.1);
    }
    return {bad == 0 && sf_bad == 0, std::to_string(checked) + " mask/encoder checks, " + std::to_string(bad) +
                                         " mismatches; step-forward 500 signals, " + std::to_string(sf_bad) +
                                         " mismatches"};
}

// -- 2 -------------------------------------------------------------------------

Outcome gradients() {
    NetworkConfig cfg;
    cfg.input_width = 8;
    cfg.hidden_width = 16;
    cfg.output_width = 8;
    cfg.beta = 0.8;
    Network net = Network::initialized(cfg, 31);
    for (double& p : net.parameters()) p *= 3.0;
    const SpikeTrain input = test::random_train(8, 4, 1, 0.5, 17);
    const SpikeTrain target = test::random_train(8, 4, 1, 0.3, 18);

    const ForwardTrace trace = simulate(net, input, SpikeMode::relaxed);
    const LossValue lv = loss_latency(trace.output_spikes, target);
    Gradients grads(net);
    backward(net, input, trace, lv.grad, grads);
    const auto r = test::finite_difference_check(
        net, [&](const Network& n) { return loss_latency(continuous_relaxation_forward(n, input), target).value; },
        grads.values, 1e-5, 200, 7);
    return {r.coordinates >= 100 && r.max_relative_error < 1e-4,
            "max relative error " + sci(r.max_relative_error) + " over " + std::to_string(r.coordinates) +
                " coordinates (limit 1e-4, >= 100)"};
}

// -- 3 -------------------------------------------------------------------------

Outcome metric_oracles() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(1, 10);
    std::uniform_int_distribution<int> level(0, 5);
    std::bernoulli_distribution flag(0.4);
    std::size_t area_cases = 0, undefined = 0, bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = size(rng);
        std::vector<double> scores;
        std::vector<std::uint8_t> labels, pred;
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(level(rng) / 5.0);
            labels.push_back(flag(rng));
            pred.push_back(flag(rng));
        }
        // Naive counting.
        double tp = 0, fp = 0, fn = 0, agree = 0;
        for (std::size_t i = 0; i < n; ++i) {
            agree += pred[i] == labels[i];
            tp += pred[i] && labels[i];
            fp += pred[i] && !labels[i];
            fn += !pred[i] && labels[i];
        }
        const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0, r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const Confusion c = confusion(pred, labels);
        bad += std::abs(accuracy(c) - agree / n) > 1e-12;
        bad += std::abs(f1(c) - (p + r > 0 ? 2 * p * r / (p + r) : 0.0)) > 1e-12;

        const bool pos = std::count(labels.begin(), labels.end(), 1) > 0;
        const bool neg = std::count(labels.begin(), labels.end(), 0) > 0;
        if (!(pos && neg)) {
            try {
                (void)auroc(scores, labels);
                ++bad;
            } catch (const UndefinedMetric&) {
                ++undefined;
            }
            continue;
        }
        const auto oracle = test::exhaustive_areas(scores, labels);
        bad += std::abs(auroc(scores, labels) - oracle.auroc) > 1e-12;
        bad += std::abs(auprc(scores, labels) - oracle.auprc) > 1e-12;
        ++area_cases;
    }
    const double fixed = auroc(std::vector<double>{0.9, 0.8, 0.4, 0.2}, std::vector<std::uint8_t>{1, 0, 1, 0});
    const bool fixed_ok = std::abs(fixed - 0.75) < 1e-12;
    return {bad == 0 && fixed_ok, std::to_string(area_cases) + " area cases and " + std::to_string(undefined) +
                                      " single-class cases, " + std::to_string(bad) + " mismatches; fixed case AUROC " +
                                      num(fixed)};
}

// -- 4 -------------------------------------------------------------------------

ExperimentParams latency_params() {
    ExperimentParams p = ExperimentParams::for_method("latency");
    p.beta = 0.727;
    p.exposure = 6;
    p.batch_size = 16;
    p.epochs = 100;
    return p;
}

ExperimentParams rate_params() {
    ExperimentParams p = ExperimentParams::for_method("rate");
    p.beta = 0.599;
    p.exposure = 1;
    p.batch_size = 107;
    p.epochs = 50;
    return p;
}

Outcome desk_scale(const Dataset& ds) {
    const RunResult r = run_experiment(ds, latency_params(), 0);
    const bool ok = r.metrics.accuracy >= 0.95 && r.metrics.auroc && *r.metrics.auroc >= 0.85 && r.metrics.f1 >= 0.5;
    return {ok, "contamination " + num(contamination_stats(ds)) + ", epochs " +
                    std::to_string(r.history.epochs.size()) + ", accuracy " + num(r.metrics.accuracy) +
                    " (>= 0.95), auroc " + opt(r.metrics.auroc) + " (>= 0.85), auprc " + opt(r.metrics.auprc) +
                    ", f1 " + num(r.metrics.f1) + " (>= 0.50)"};
}

// -- 5 and 7 ---------------------------------------------------------------------

std::optional<RepeatSummary> latency_repeats;

Outcome ordering(const Dataset& ds) {
    latency_repeats = repeat_eval(ds, latency_params(), 5, 100, {}, 1);
    const RepeatSummary rate = repeat_eval(ds, rate_params(), 5, 100, {}, 1);
    const auto F1 = static_cast<std::size_t>(Metric::f1);
    const double lat_f1 = latency_repeats->stats[F1].mean, rate_f1 = rate.stats[F1].mean;
    return {lat_f1 > rate_f1 && rate_f1 < 0.3, "mean f1 latency " + num(lat_f1) + " vs rate " + num(rate_f1) +
                                                   " (rate max " + num(rate.stats[F1].max) + ", limit 0.3)"};
}

Outcome repeat_protocol() {
    if (!latency_repeats) return {false, "latency repeats missing"};
    const RepeatSummary& s = *latency_repeats;
    bool ok = s.runs.size() == 5 && s.seeds == std::vector<std::uint64_t>{100, 101, 102, 103, 104};
    double worst = 0.0;
    for (Metric m : kAllMetrics) {
        std::vector<double> xs;
        for (const auto& r : s.runs)
            if (std::isfinite(metric_value(r, m))) xs.push_back(metric_value(r, m));
        const MetricStats& st = s.stats[static_cast<std::size_t>(m)];
        if (xs.empty()) {
            ok = ok && st.n == 0;
            continue;
        }
        const auto [mean, sd] = test::two_pass_stats(xs);
        ok = ok && st.n == xs.size();
        ok = ok && st.mean >= *std::min_element(xs.begin(), xs.end()) &&
             st.mean <= *std::max_element(xs.begin(), xs.end());
        worst = std::max({worst, std::abs(st.std - sd), std::abs(st.mean - mean)});
    }
    ok = ok && worst < 1e-12;
    const auto A = static_cast<std::size_t>(Metric::auroc);
    return {ok, "n=5, latency auroc " + num(s.stats[A].mean) + " +/- " + num(s.stats[A].std) +
                    ", max deviation from two-pass oracle " + sci(worst)};
}

// -- 6 -------------------------------------------------------------------------

Outcome search_protocol() {
    GeneratorConfig g;
    g.n_train = 6;
    g.n_test = 2;
    g.freq_channels = 64;
    g.time_steps = 64;
    g.contamination_tolerance = 0.05;
    g.seed = 6;
    const Dataset ds = generate_dataset(g);

    test::TempDir dir("acceptance_search");
    SearchConfig cfg;
    cfg.method = "latency";
    cfg.master_seed = 60;
    cfg.workers = 1;
    cfg.record_path = dir / "trials.jsonl";

    // An interrupted run: four trials and a torn fifth line.
    cfg.n_trials = 4;
    const auto partial = run_search(ds, cfg);
    {
        std::ofstream out(cfg.record_path, std::ios::app);
        out << "{\"index\":4,\"meth";
    }
    cfg.n_trials = 10;
    const auto trials = run_search(ds, cfg);
    const auto stored = read_trial_records(cfg.record_path);

    bool ok = trials.size() == 10 && stored.size() == 10;
    std::set<std::size_t> indices;
    for (const auto& t : stored) indices.insert(t.index);
    ok = ok && indices.size() == 10 && *indices.rbegin() == 9;
    for (std::size_t i = 0; i < partial.size(); ++i) ok = ok && trials[i].params.beta == partial[i].params.beta;
    std::size_t succeeded = 0;
    for (const auto& t : trials) {
        const auto& p = t.params;
        ok = ok && p.batch_size >= 16 && p.batch_size <= 128 && p.epochs >= 5 && p.epochs <= 100 && p.beta >= 0.5 &&
             p.beta <= 0.99 && p.exposure >= 1 && p.exposure <= 64;
        succeeded += t.ok();
    }

    const Selection sel = select_best(trials);
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> ok_index;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (!trials[i].ok()) continue;
        std::vector<double> p;
        for (Metric m : kAllMetrics) p.push_back(metric_value(*trials[i].metrics, m));
        points.push_back(p);
        ok_index.push_back(i);
    }
    std::vector<std::size_t> front;
    for (auto k : test::dominance_front(points)) front.push_back(ok_index[k]);
    ok = ok && sel.pareto_front == front;
    for (Metric m : kAllMetrics) {
        const std::size_t c = sel.champions[static_cast<std::size_t>(m)];
        ok = ok && trials[c].ok();
        for (const auto& t : trials)
            if (t.ok()) ok = ok && metric_value(*t.metrics, m) <= metric_value(*trials[c].metrics, m);
    }
    std::string champs;
    for (auto c : sel.champions) champs += (champs.empty() ? "" : ",") + std::to_string(trials[c].index);
    return {ok, "10 trials (" + std::to_string(succeeded) + " ok) after resuming from 4, champions [" + champs +
                    "], front size " + std::to_string(sel.pareto_front.size()) + " matches oracle"};
}

// -- 8 -------------------------------------------------------------------------

Outcome silent(const Dataset& ds) {
    const EvalRecord r = evaluate_predictions(predict_silent(ds.test), ds.test);
    const double c = ds.manifest.contamination_fraction;
    return {std::abs(r.accuracy - (1.0 - c)) <= 0.01,
            "accuracy " + num(r.accuracy) + " vs 1 - contamination " + num(1.0 - c) + " (+/- 0.01)"};
}

}  // namespace

int main() {
    report(1, "encoder invariants", 60, encoders);
    report(2, "BPTT vs finite differences", 60, gradients);
    report(3, "metric oracles", 60, metric_oracles);

    const Dataset ds = generate_dataset(GeneratorConfig{});
    report(4, "desk-scale latency SNN", 30 * 60, [&] { return desk_scale(ds); });
    report(5, "latency beats rate over 5 seeds", 0, [&] { return ordering(ds); });
    report(6, "random search protocol", 0, search_protocol);
    report(7, "repeat protocol", 0, repeat_protocol);
    report(8, "silent baseline", 0, [&] { return silent(ds); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}

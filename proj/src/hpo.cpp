#include "snnrfi/hpo.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kv_text.hpp"
#include "snnrfi/errors.hpp"

namespace snnrfi {

using nlohmann::json;

void ParamRanges::validate() const {
    if (batch_min < 1 || batch_max < batch_min) throw ConfigError("hpo: bad batch_size range");
    if (epochs_min < 1 || epochs_max < epochs_min) throw ConfigError("hpo: bad epochs range");
    if (!(beta_min > 0.0 && beta_max >= beta_min && beta_max < 1.0)) throw ConfigError("hpo: bad beta range");
    if (exposure_min < 1 || exposure_max < exposure_min) throw ConfigError("hpo: bad exposure range");
}

ParamRanges ParamRanges::for_method(const ParamRanges& base, const std::string& method) {
    ParamRanges r = base;
    if (method == "latency" || method == "sf-first" || method == "sf-latency") {
        r.exposure_min = std::max(r.exposure_min, 2);
        r.exposure_max = std::max(r.exposure_max, r.exposure_min);
    }
    return r;
}

namespace {

bool has_exposure(const ExperimentParams& p) {
    return p.model == ModelKind::snn && p.encoding != EncodingMethod::delta;
}

}  // namespace

ExperimentParams sample_trial(std::mt19937_64& rng, const std::string& method, const ParamRanges& base) {
    const ParamRanges r = ParamRanges::for_method(base, method);
    r.validate();
    ExperimentParams p = ExperimentParams::for_method(method);
    p.batch_size = std::uniform_int_distribution<int>(r.batch_min, r.batch_max)(rng);
    p.epochs = std::uniform_int_distribution<int>(r.epochs_min, r.epochs_max)(rng);
    p.beta = std::uniform_real_distribution<double>(r.beta_min, r.beta_max)(rng);
    // Drawn for every method so the other attributes do not depend on it.
    const int exposure = std::uniform_int_distribution<int>(r.exposure_min, r.exposure_max)(rng);
    p.exposure = has_exposure(p) ? exposure : 1;
    return p;
}

ExperimentParams sample_trial(std::uint64_t master_seed, std::size_t index, const std::string& method,
                              const ParamRanges& ranges) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t(index) >> 32)};
    std::mt19937_64 rng(seq);
    return sample_trial(rng, method, ranges);
}

// -- records -----------------------------------------------------------------

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string to_json_line(const TrialRecord& r) {
    json j;
    j["index"] = r.index;
    j["method"] = r.params.method_name();
    json params{{"batch_size", r.params.batch_size}, {"epochs", r.params.epochs}, {"beta", r.params.beta}};
    params["exposure"] = has_exposure(r.params) ? json(r.params.exposure) : json(nullptr);
    j["params"] = params;
    j["seed"] = r.seed;
    if (r.metrics) {
        j["metrics"] = {{"accuracy", r.metrics->accuracy},
                        {"auroc", optional_json(r.metrics->auroc)},
                        {"auprc", optional_json(r.metrics->auprc)},
                        {"f1", r.metrics->f1},
                        {"n_pixels", r.metrics->n_pixels}};
    } else {
        j["metrics"] = nullptr;
    }
    j["error"] = r.error;
    j["wall_time_seconds"] = r.wall_time_seconds;
    return j.dump();
}

TrialRecord trial_from_json_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        TrialRecord r;
        r.index = j.at("index").get<std::size_t>();
        r.params = ExperimentParams::for_method(j.at("method").get<std::string>());
        const json& p = j.at("params");
        r.params.batch_size = p.at("batch_size").get<int>();
        r.params.epochs = p.at("epochs").get<int>();
        r.params.beta = p.at("beta").get<double>();
        r.params.exposure = p.at("exposure").is_null() ? 1 : p.at("exposure").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("metrics").is_null()) {
            const json& m = j.at("metrics");
            EvalRecord e;
            e.accuracy = m.at("accuracy").get<double>();
            e.auroc = optional_from(m.at("auroc"));
            e.auprc = optional_from(m.at("auprc"));
            e.f1 = m.at("f1").get<double>();
            e.n_pixels = m.value("n_pixels", std::size_t{0});
            r.metrics = e;
        }
        r.error = j.value("error", std::string{});
        r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
        return r;
    } catch (const json::exception& e) {
        throw FormatError(std::string("trial record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("trial record: ") + e.what());
    }
}

std::vector<TrialRecord> read_trial_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trial records " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!detail::trim(line).empty()) lines.push_back(line);
    std::vector<TrialRecord> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(trial_from_json_line(lines[i]));
        } catch (const FormatError& e) {
            if (i + 1 == lines.size()) break;
            throw FormatError(path.string() + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

void append_trial_record(const std::filesystem::path& path, const TrialRecord& record) {
    // A truncated last line from an interrupted run would swallow this record.
    bool needs_newline = false;
    if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
        std::ifstream in(path, std::ios::binary);
        in.seekg(-1, std::ios::end);
        needs_newline = in.get() != '\n';
    }
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to " + path.string());
    if (needs_newline) out << '\n';
    out << to_json_line(record) << '\n';
    out.flush();
    if (!out) throw DataError("write failed for " + path.string());
}

// -- search ------------------------------------------------------------------

void SearchConfig::validate() const {
    if (n_trials < 1) throw ConfigError("search: n_trials must be >= 1");
    ExperimentParams::for_method(method);
    ranges.validate();
}

unsigned default_workers() {
    if (const char* env = std::getenv("SNNRFI_WORKERS")) {
        try {
            const int n = detail::parse_int(env, "SNNRFI_WORKERS");
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

TrialRecord run_trial(const Dataset& dataset, const SearchConfig& cfg, std::size_t index) {
    TrialRecord r;
    r.index = index;
    r.params = sample_trial(cfg.master_seed, index, cfg.method, cfg.ranges);
    r.seed = cfg.master_seed + index;
    const auto start = std::chrono::steady_clock::now();
    try {
        r.metrics = run_experiment(dataset, r.params, r.seed, cfg.options).metrics;
    } catch (const TrainingError& e) {
        r.error = e.what();
    } catch (const UndefinedMetric& e) {
        r.error = e.what();
    }
    r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// Cut an unparseable last line left by an interrupted run, so new records do
// not end up behind it.
void drop_torn_tail(const std::filesystem::path& path) {
    std::string text;
    {
        std::ifstream in(path, std::ios::binary);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    std::size_t end = text.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    if (end == 0) return;
    const std::size_t begin = text.rfind('\n', end - 1);
    const std::size_t start = begin == std::string::npos ? 0 : begin + 1;
    try {
        (void)trial_from_json_line(text.substr(start, end - start));
    } catch (const FormatError&) {
        std::filesystem::resize_file(path, start);
    }
}

}  // namespace

std::vector<TrialRecord> run_search(const Dataset& dataset, const SearchConfig& cfg) {
    cfg.validate();
    std::map<std::size_t, TrialRecord> done;
    if (!cfg.record_path.empty() && std::filesystem::exists(cfg.record_path)) {
        for (auto& r : read_trial_records(cfg.record_path)) {
            if (r.index >= cfg.n_trials) continue;
            if (r.params.method_name() != cfg.method) {
                throw ConfigError("search: " + cfg.record_path.string() + " holds records of method " +
                                  r.params.method_name());
            }
            done.emplace(r.index, std::move(r));
        }
        drop_torn_tail(cfg.record_path);
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cfg.n_trials; ++i)
        if (!done.count(i)) todo.push_back(i);

    std::mutex mu;
    parallel_for(todo.size(), cfg.workers ? cfg.workers : default_workers(), [&](std::size_t k) {
        TrialRecord r = run_trial(dataset, cfg, todo[k]);
        std::lock_guard lock(mu);
        if (!cfg.record_path.empty()) append_trial_record(cfg.record_path, r);
        done.emplace(r.index, std::move(r));
    });

    std::vector<TrialRecord> out;
    for (auto& [i, r] : done) out.push_back(std::move(r));
    return out;
}

// -- selection ---------------------------------------------------------------

std::string to_string(Metric m) {
    switch (m) {
        case Metric::accuracy: return "accuracy";
        case Metric::auroc: return "auroc";
        case Metric::auprc: return "auprc";
        case Metric::f1: return "f1";
    }
    return "?";
}

double metric_value(const EvalRecord& r, Metric m) {
    constexpr double worst = -std::numeric_limits<double>::infinity();
    switch (m) {
        case Metric::accuracy: return r.accuracy;
        case Metric::auroc: return r.auroc.value_or(worst);
        case Metric::auprc: return r.auprc.value_or(worst);
        case Metric::f1: return r.f1;
    }
    return worst;
}

bool dominates(const EvalRecord& a, const EvalRecord& b) {
    bool better = false;
    for (Metric m : kAllMetrics) {
        const double x = metric_value(a, m);
        const double y = metric_value(b, m);
        if (x < y) return false;
        if (x > y) better = true;
    }
    return better;
}

Selection select_best(std::span<const TrialRecord> trials) {
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < trials.size(); ++i)
        if (trials[i].ok()) ok.push_back(i);
    if (ok.empty()) throw TrainingError("select_best: no successful trials");

    // Positions follow trial index so ties go to the earlier trial.
    std::stable_sort(ok.begin(), ok.end(),
                     [&](std::size_t a, std::size_t b) { return trials[a].index < trials[b].index; });

    Selection s;
    for (Metric m : kAllMetrics) {
        std::size_t best = ok.front();
        for (std::size_t i : ok)
            if (metric_value(*trials[i].metrics, m) > metric_value(*trials[best].metrics, m)) best = i;
        s.champions[static_cast<std::size_t>(m)] = best;
    }
    for (std::size_t i : ok) {
        const bool dominated = std::any_of(ok.begin(), ok.end(), [&](std::size_t j) {
            return j != i && dominates(*trials[j].metrics, *trials[i].metrics);
        });
        if (!dominated) s.pareto_front.push_back(i);
    }
    std::sort(s.pareto_front.begin(), s.pareto_front.end());
    return s;
}

// -- repeats -----------------------------------------------------------------

MetricStats describe(std::span<const double> values) {
    MetricStats s;
    s.n = values.size();
    if (values.empty()) return s;
    // Shifted by the first value so that identical runs give exactly std 0.
    const double shift = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - shift;
    const double offset = sum / static_cast<double>(s.n);
    s.mean = shift + offset;
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - shift - offset) * (v - shift - offset);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

RepeatSummary summarize(const std::string& method, std::span<const EvalRecord> runs) {
    RepeatSummary out;
    out.method = method;
    out.runs.assign(runs.begin(), runs.end());
    for (Metric m : kAllMetrics) {
        std::vector<double> values;
        for (const auto& r : runs) {
            const double v = metric_value(r, m);
            if (std::isfinite(v)) values.push_back(v);
        }
        out.stats[static_cast<std::size_t>(m)] = describe(values);
    }
    return out;
}

RepeatSummary repeat_eval(const Dataset& dataset, const ExperimentParams& params, std::size_t n,
                          std::uint64_t master_seed, const RunOptions& options, unsigned workers) {
    if (n < 1) throw ConfigError("repeat_eval: n must be >= 1");
    std::vector<std::optional<EvalRecord>> results(n);
    std::vector<std::string> errors(n);
    parallel_for(n, workers ? workers : default_workers(), [&](std::size_t i) {
        try {
            results[i] = run_experiment(dataset, params, master_seed + i, options).metrics;
        } catch (const TrainingError& e) {
            errors[i] = e.what();
        } catch (const UndefinedMetric& e) {
            errors[i] = e.what();
        }
    });

    std::vector<EvalRecord> ok;
    std::vector<std::uint64_t> seeds;
    std::ostringstream failures;
    for (std::size_t i = 0; i < n; ++i) {
        if (results[i]) {
            ok.push_back(*results[i]);
            seeds.push_back(master_seed + i);
        } else {
            failures << "\n  seed " << master_seed + i << ": " << errors[i];
        }
    }
    const std::size_t failed = n - ok.size();
    if (failed * 5 > n) {
        throw TrainingError("repeat_eval: " + std::to_string(failed) + " of " + std::to_string(n) +
                            " repeats failed" + failures.str());
    }
    RepeatSummary s = summarize(params.method_name(), ok);
    s.seeds = std::move(seeds);
    s.failed = failed;
    return s;
}

// -- report ------------------------------------------------------------------

std::vector<MetricRow> read_metric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open metric file " + path.string());
    std::vector<MetricRow> rows;
    std::string line;
    std::size_t lineno = 0;
    const std::string where = path.string();
    auto optional_cell = [&](const std::string& s) -> std::optional<double> {
        if (s == "NA") return std::nullopt;
        return detail::parse_double(s, where);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line == metric_csv_header()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(detail::trim(cell));
        if (cells.size() != 6) {
            throw FormatError(where + " line " + std::to_string(lineno) + ": expected 6 columns");
        }
        MetricRow row;
        row.method = cells[0];
        row.seed = static_cast<std::uint64_t>(detail::parse_int(cells[1], where));
        row.record.accuracy = detail::parse_double(cells[2], where);
        row.record.auroc = optional_cell(cells[3]);
        row.record.auprc = optional_cell(cells[4]);
        row.record.f1 = detail::parse_double(cells[5], where);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string report_csv(std::span<const MetricRow> rows) {
    std::map<std::string, std::vector<EvalRecord>> by_method;
    for (const auto& r : rows) by_method[r.method].push_back(r.record);
    std::ostringstream out;
    out << "method,n";
    for (Metric m : kAllMetrics) out << ',' << to_string(m) << "_mean," << to_string(m) << "_std";
    out << '\n';
    for (const auto& [method, records] : by_method) {
        const RepeatSummary s = summarize(method, records);
        out << method << ',' << records.size();
        for (Metric m : kAllMetrics) {
            const MetricStats& st = s.stats[static_cast<std::size_t>(m)];
            if (st.n == 0) {
                out << ",NA,NA";
            } else {
                out << ',' << detail::format_double(st.mean) << ',' << detail::format_double(st.std);
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace snnrfi

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "snnrfi/dataset_io.hpp"
#include "snnrfi/metrics.hpp"
#include "snnrfi/pipeline.hpp"

namespace snnrfi {

/// Inclusive search ranges.
struct ParamRanges {
    int batch_min = 16, batch_max = 128;
    int epochs_min = 5, epochs_max = 100;
    double beta_min = 0.5, beta_max = 0.99;
    int exposure_min = 1, exposure_max = 64;

    void validate() const;
    /// Default ranges, with the exposure floor raised to 2 for methods whose
    /// decoding reserves the final slot (latency, sf-first, sf-latency).
    static ParamRanges for_method(const ParamRanges& base, const std::string& method);
};

/// Draws batch size, epochs, beta and (except for delta and the ANN) exposure.
ExperimentParams sample_trial(std::mt19937_64& rng, const std::string& method, const ParamRanges& ranges = {});
/// Deterministic per (master_seed, trial index).
ExperimentParams sample_trial(std::uint64_t master_seed, std::size_t index, const std::string& method,
                              const ParamRanges& ranges = {});

struct TrialRecord {
    std::size_t index = 0;
    ExperimentParams params;
    std::uint64_t seed = 0;
    /// Absent for failed trials.
    std::optional<EvalRecord> metrics;
    std::string error;
    double wall_time_seconds = 0.0;

    bool ok() const noexcept { return metrics.has_value(); }
};

/// One JSON object per line.
std::string to_json_line(const TrialRecord& record);
TrialRecord trial_from_json_line(const std::string& line);
/// Reads every complete record. A malformed final line (an interrupted
/// write) is skipped; malformed lines elsewhere throw FormatError.
std::vector<TrialRecord> read_trial_records(const std::filesystem::path& path);
void append_trial_record(const std::filesystem::path& path, const TrialRecord& record);

struct SearchConfig {
    std::size_t n_trials = 10;
    std::string method = "latency";
    std::uint64_t master_seed = 0;
    ParamRanges ranges;
    /// Concurrent trials; 0 reads SNNRFI_WORKERS (default 1).
    unsigned workers = 0;
    /// Empty = keep records in memory only.
    std::filesystem::path record_path;
    RunOptions options;

    void validate() const;
};

/// Worker count from SNNRFI_WORKERS, at least 1.
unsigned default_workers();

/// Runs the trials missing from cfg.record_path (if any) and returns all
/// n_trials records ordered by index. Trial failures are recorded, not thrown.
std::vector<TrialRecord> run_search(const Dataset& dataset, const SearchConfig& cfg);

enum class Metric { accuracy = 0, auroc = 1, auprc = 2, f1 = 3 };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::accuracy, Metric::auroc, Metric::auprc, Metric::f1};
std::string to_string(Metric m);
/// Missing AUROC/AUPRC read as -infinity.
double metric_value(const EvalRecord& r, Metric m);

struct Selection {
    /// Position in the input span of the champion for each metric.
    std::array<std::size_t, 4> champions{};
    /// Positions of the non-dominated successful trials, ascending.
    std::vector<std::size_t> pareto_front;
};

/// Per-metric argmax (ties to the earlier trial) and the Pareto front under
/// 4-metric maximisation. Throws TrainingError if no trial succeeded.
Selection select_best(std::span<const TrialRecord> trials);

/// true if a is at least as good everywhere and better somewhere.
bool dominates(const EvalRecord& a, const EvalRecord& b);

struct MetricStats {
    double mean = 0.0;
    /// Sample standard deviation, 0 for a single value.
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

MetricStats describe(std::span<const double> values);

struct RepeatSummary {
    std::string method;
    std::vector<std::uint64_t> seeds;
    std::vector<EvalRecord> runs;
    std::size_t failed = 0;
    /// Indexed by Metric; absent areas are left out of their statistic.
    std::array<MetricStats, 4> stats{};
};

RepeatSummary summarize(const std::string& method, std::span<const EvalRecord> runs);

/// n independent train+eval runs with seeds master_seed + i. Throws
/// TrainingError when more than 20% of the runs fail.
RepeatSummary repeat_eval(const Dataset& dataset, const ExperimentParams& params, std::size_t n,
                          std::uint64_t master_seed, const RunOptions& options = {}, unsigned workers = 0);

struct MetricRow {
    std::string method;
    std::uint64_t seed = 0;
    EvalRecord record;
};

/// Rows of a metric CSV as written by metric_csv_row().
std::vector<MetricRow> read_metric_csv(const std::filesystem::path& path);

/// method,n,<metric>_mean,<metric>_std... one row per method, sorted by method.
std::string report_csv(std::span<const MetricRow> rows);

}  // namespace snnrfi

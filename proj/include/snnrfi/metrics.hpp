#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snnrfi/data.hpp"

namespace snnrfi {

/// Per-pixel evaluation. AUROC/AUPRC are absent when undefined for the labels.
struct EvalRecord {
    double accuracy = 0.0;
    std::optional<double> auroc;
    std::optional<double> auprc;
    double f1 = 0.0;
    std::size_t n_pixels = 0;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// Counts over pixels not set in `ignore` (empty span = nothing ignored).
Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                    std::span<const std::uint8_t> ignore = {});

double accuracy(const Confusion& c);
/// 2PR / (P + R), 0 when P + R = 0.
double f1(const Confusion& c);

double accuracy(const RFIMask& pred, const RFIMask& truth);
double f1(const RFIMask& pred, const RFIMask& truth);

struct RocPoint {
    double fpr, tpr, threshold;
};
struct PrPoint {
    double recall, precision, threshold;
};

/// One point per distinct score (descending, ties grouped), preceded by (0, 0).
/// Throws UndefinedMetric unless both classes are present.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// Trapezoidal area under roc_curve().
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// One point per distinct score, descending. Throws UndefinedMetric without positives.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// Step-wise area: sum over thresholds of (R_k - R_{k-1}) * P_k.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// All four metrics over the unignored pixels.
EvalRecord evaluate_pixels(std::span<const std::uint8_t> pred, std::span<const double> scores,
                           std::span<const std::uint8_t> truth, std::span<const std::uint8_t> ignore = {});

std::string metric_csv_header();
/// method,seed,accuracy,auroc,auprc,f1 (undefined areas written as NA).
std::string metric_csv_row(const std::string& method, std::uint64_t seed, const EvalRecord& record);

}  // namespace snnrfi

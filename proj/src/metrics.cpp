#include "snnrfi/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "kv_text.hpp"
#include "snnrfi/errors.hpp"

namespace snnrfi {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

/// Scores sorted descending together with the running TP/FP counts at each
/// distinct threshold.
struct Sweep {
    std::vector<double> thresholds;
    std::vector<std::size_t> tp;
    std::vector<std::size_t> fp;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

Sweep sweep(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores.size(), labels.size(), "threshold sweep");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    Sweep s;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (labels[order[i]]) {
            ++tp;
        } else {
            ++fp;
        }
        const bool last_of_group = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
        if (last_of_group) {
            s.thresholds.push_back(scores[order[i]]);
            s.tp.push_back(tp);
            s.fp.push_back(fp);
        }
    }
    s.positives = tp;
    s.negatives = fp;
    return s;
}

}  // namespace

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                    std::span<const std::uint8_t> ignore) {
    check_lengths(pred.size(), truth.size(), "confusion");
    if (!ignore.empty()) check_lengths(ignore.size(), truth.size(), "confusion");
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!ignore.empty() && ignore[i]) continue;
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double accuracy(const Confusion& c) {
    if (c.total() == 0) throw std::invalid_argument("accuracy: no pixels");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1(const Confusion& c) {
    const double precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    const double recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double accuracy(const RFIMask& pred, const RFIMask& truth) {
    if (!pred.flags.same_shape(truth.flags)) throw ShapeError("accuracy: mask shapes differ");
    return accuracy(confusion(pred.flags.data(), truth.flags.data()));
}

double f1(const RFIMask& pred, const RFIMask& truth) {
    if (!pred.flags.same_shape(truth.flags)) throw ShapeError("f1: mask shapes differ");
    return f1(confusion(pred.flags.data(), truth.flags.data()));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const Sweep s = sweep(scores, labels);
    if (s.positives == 0 || s.negatives == 0) throw UndefinedMetric("ROC needs both positive and negative labels");
    std::vector<RocPoint> curve;
    curve.reserve(s.thresholds.size() + 1);
    curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
        curve.push_back({static_cast<double>(s.fp[k]) / static_cast<double>(s.negatives),
                         static_cast<double>(s.tp[k]) / static_cast<double>(s.positives), s.thresholds[k]});
    }
    return curve;
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto curve = roc_curve(scores, labels);
    double area = 0.0;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        area += (curve[k].fpr - curve[k - 1].fpr) * (curve[k].tpr + curve[k - 1].tpr) / 2.0;
    }
    return area;
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const Sweep s = sweep(scores, labels);
    if (s.positives == 0) throw UndefinedMetric("precision-recall needs at least one positive label");
    std::vector<PrPoint> curve;
    curve.reserve(s.thresholds.size());
    for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
        const double predicted = static_cast<double>(s.tp[k] + s.fp[k]);
        curve.push_back({static_cast<double>(s.tp[k]) / static_cast<double>(s.positives),
                         static_cast<double>(s.tp[k]) / predicted, s.thresholds[k]});
    }
    return curve;
}

double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto curve = pr_curve(scores, labels);
    double area = 0.0;
    double previous_recall = 0.0;
    for (const auto& p : curve) {
        area += (p.recall - previous_recall) * p.precision;
        previous_recall = p.recall;
    }
    return area;
}

EvalRecord evaluate_pixels(std::span<const std::uint8_t> pred, std::span<const double> scores,
                           std::span<const std::uint8_t> truth, std::span<const std::uint8_t> ignore) {
    check_lengths(scores.size(), truth.size(), "evaluate_pixels");
    const Confusion c = confusion(pred, truth, ignore);
    EvalRecord r;
    r.n_pixels = c.total();
    r.accuracy = accuracy(c);
    r.f1 = f1(c);

    std::vector<double> kept_scores;
    std::vector<std::uint8_t> kept_labels;
    kept_scores.reserve(r.n_pixels);
    kept_labels.reserve(r.n_pixels);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!ignore.empty() && ignore[i]) continue;
        kept_scores.push_back(scores[i]);
        kept_labels.push_back(truth[i] ? 1 : 0);
    }
    try {
        r.auroc = auroc(kept_scores, kept_labels);
    } catch (const UndefinedMetric&) {
    }
    try {
        r.auprc = auprc(kept_scores, kept_labels);
    } catch (const UndefinedMetric&) {
    }
    return r;
}

std::string metric_csv_header() { return "method,seed,accuracy,auroc,auprc,f1"; }

std::string metric_csv_row(const std::string& method, std::uint64_t seed, const EvalRecord& r) {
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string("NA"); };
    std::ostringstream out;
    out << method << ',' << seed << ',' << detail::format_double(r.accuracy) << ',' << opt(r.auroc) << ','
        << opt(r.auprc) << ',' << detail::format_double(r.f1);
    return out.str();
}

}  // namespace snnrfi

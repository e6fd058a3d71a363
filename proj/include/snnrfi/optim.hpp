#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace snnrfi {

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

/// One Adam update with bias correction. Throws ShapeError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

/// Multiplies the learning rate by `factor` once the monitored loss has not
/// improved by more than `min_delta` for `patience` consecutive epochs.
class ReduceOnPlateau {
  public:
    ReduceOnPlateau(double lr, int patience, double factor = 0.5, double min_delta = 1e-4)
        : lr_(lr), patience_(patience), factor_(factor), min_delta_(min_delta) {}

    /// Feeds one epoch's loss; returns true when the rate was just reduced.
    bool observe(double loss);
    double lr() const noexcept { return lr_; }

  private:
    double lr_;
    int patience_;
    double factor_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int stale_ = 0;
};

/// Signals a stop after `patience` epochs without improvement beyond `min_delta`.
class EarlyStopping {
  public:
    explicit EarlyStopping(int patience, double min_delta = 1e-4) : patience_(patience), min_delta_(min_delta) {}

    /// Returns true when training should stop.
    bool observe(double loss);
    /// True when the last observed loss was a new best.
    bool improved() const noexcept { return stale_ == 0; }
    double best() const noexcept { return best_; }

  private:
    int patience_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int stale_ = 0;
};

}  // namespace snnrfi

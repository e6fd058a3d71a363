#pragma once

#include <cmath>
#include <numbers>

namespace snnrfi {

struct LifOutput {
    double spike = 0.0;
    double membrane = 0.0;
};

/// One leaky integrate-and-fire update with reset by subtraction:
///   u_pre = beta * u + current;  s = [u_pre >= threshold];  u' = u_pre - s * threshold
inline LifOutput lif_step(double membrane, double current, double beta, double threshold) {
    const double pre = beta * membrane + current;
    const double spike = pre >= threshold ? 1.0 : 0.0;
    return {spike, pre - spike * threshold};
}

/// Arctangent surrogate derivative of the Heaviside spike at x = u_pre - threshold:
///   (slope / 2) / (1 + (pi * slope * x / 2)^2)
/// Peaks at slope / 2 for x = 0. It is the exact derivative of atan_spike().
inline double surrogate_grad(double x, double slope) {
    const double z = std::numbers::pi * slope * x / 2.0;
    return (slope / 2.0) / (1.0 + z * z);
}

/// Smooth spike used by the continuous relaxation: atan(pi * slope * x / 2) / pi + 1/2.
inline double atan_spike(double x, double slope) {
    return std::atan(std::numbers::pi * slope * x / 2.0) / std::numbers::pi + 0.5;
}

}  // namespace snnrfi

#include "snnrfi/optim.hpp"

#include <cmath>

#include "snnrfi/errors.hpp"

namespace snnrfi {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw ShapeError("adam_step: parameter, gradient and state sizes differ");
    }
    ++state.step;
    const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

bool ReduceOnPlateau::observe(double loss) {
    if (loss < best_ - min_delta_) {
        best_ = loss;
        stale_ = 0;
        return false;
    }
    if (++stale_ >= patience_) {
        lr_ *= factor_;
        stale_ = 0;
        return true;
    }
    return false;
}

bool EarlyStopping::observe(double loss) {
    if (loss < best_ - min_delta_) {
        best_ = loss;
        stale_ = 0;
        return false;
    }
    ++stale_;
    return stale_ >= patience_;
}

}  // namespace snnrfi

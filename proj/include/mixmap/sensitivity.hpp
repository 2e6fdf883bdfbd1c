#pragma once

#include "mixmap/surrogate.hpp"

namespace mixmap {

struct SmoothGradConfig {
    int n_samples = 50;
    double sigma = 0.1;     // noise std, fraction of each input's observed range
    double fd_step = 0.01;  // central-difference step, fraction of range
    std::uint64_t seed = 0;

    void validate() const;
};

struct SensitivityVector {
    std::size_t output_index = 0;
    InputPoint values{};      // d y_j / d x_i estimates
    InputPoint tangent{};     // values minus their mean (sum-zero)
    InputPoint sample_std{};  // spread of the per-sample gradients
    std::size_t clamp_count = 0;
};

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h, no re-projection.
InputPoint finite_diff_gradient(const MixtureModel& model, const InputPoint& x, std::size_t j, double step);

// Per-coordinate step variant used by smoothgrad.
InputPoint finite_diff_gradient(const MixtureModel& model, const InputPoint& x, std::size_t j,
                                const InputPoint& steps);

// Mean finite-difference gradient over noisy copies of x. Noisy points are
// clamped to [0,1] per coordinate; clamps are counted.
SensitivityVector smoothgrad(const MixtureModel& model, const InputPoint& x, std::size_t j,
                             const SmoothGradConfig& config);

InputPoint sum_zero_tangent(const InputPoint& values);

}  // namespace mixmap

#include "mixmap/sensitivity.hpp"

#include <cmath>

#include "mixmap/rng.hpp"

namespace mixmap {

void SmoothGradConfig::validate() const {
    if (n_samples < 1) throw Error(ErrorKind::validation, "n_samples must be >= 1", "n_samples");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::validation, "sigma must be > 0", "sigma");
    if (!(fd_step > 0.0) || !std::isfinite(fd_step))
        throw Error(ErrorKind::validation, "fd_step must be > 0", "fd_step");
}

InputPoint finite_diff_gradient(const MixtureModel& model, const InputPoint& x, std::size_t j,
                                const InputPoint& steps) {
    if (j >= kOutputDims) throw Error(ErrorKind::validation, "output index out of range", "output_index");
    InputPoint g{};
    for (std::size_t i = 0; i < kInputDims; ++i) {
        if (!(steps[i] > 0.0)) throw Error(ErrorKind::validation, "finite-difference step must be > 0", "step");
        InputPoint up = x, down = x;
        up[i] += steps[i];
        down[i] -= steps[i];
        g[i] = (model.predict_single(up, j) - model.predict_single(down, j)) / (2.0 * steps[i]);
    }
    return g;
}

InputPoint finite_diff_gradient(const MixtureModel& model, const InputPoint& x, std::size_t j, double step) {
    InputPoint steps;
    steps.fill(step);
    return finite_diff_gradient(model, x, j, steps);
}

InputPoint sum_zero_tangent(const InputPoint& values) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(kInputDims);
    InputPoint t;
    for (std::size_t i = 0; i < kInputDims; ++i) t[i] = values[i] - mean;
    return t;
}

SensitivityVector smoothgrad(const MixtureModel& model, const InputPoint& x, std::size_t j,
                             const SmoothGradConfig& config) {
    config.validate();
    if (j >= kOutputDims) throw Error(ErrorKind::validation, "output index out of range", "output_index");
    const InputPoint range = model.input_range();
    InputPoint steps;
    for (std::size_t i = 0; i < kInputDims; ++i) steps[i] = config.fd_step * range[i];

    // The full noise table is drawn up front so evaluation order never
    // influences the result.
    const auto n = static_cast<std::size_t>(config.n_samples);
    std::vector<InputPoint> noisy(n);
    Rng rng(config.seed);
    SensitivityVector out;
    out.output_index = j;
    for (auto& p : noisy) {
        for (std::size_t i = 0; i < kInputDims; ++i) {
            double v = x[i] + config.sigma * range[i] * rng.normal();
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                ++out.clamp_count;
            }
            p[i] = v;
        }
    }

    InputPoint sum{}, sum_sq{};
    for (const auto& p : noisy) {
        const auto g = finite_diff_gradient(model, p, j, steps);
        for (std::size_t i = 0; i < kInputDims; ++i) {
            sum[i] += g[i];
            sum_sq[i] += g[i] * g[i];
        }
    }
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < kInputDims; ++i) {
        out.values[i] = sum[i] / dn;
        const double var = n > 1 ? (sum_sq[i] - dn * out.values[i] * out.values[i]) / (dn - 1.0) : 0.0;
        out.sample_std[i] = std::sqrt(std::max(var, 0.0));
    }
    out.tangent = sum_zero_tangent(out.values);
    return out;
}

}  // namespace mixmap

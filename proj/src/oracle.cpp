#include "mixmap/oracle.hpp"

#include <cmath>

#include "mixmap/rng.hpp"

namespace mixmap {

const char* to_string(ResponseKind kind) {
    switch (kind) {
        case ResponseKind::linear: return "linear";
        case ResponseKind::quadratic: return "quadratic";
        case ResponseKind::smooth_mix: return "smooth-mix";
        case ResponseKind::constant: return "constant";
    }
    return "?";
}

double ResponseSurface::value(const InputPoint& x) const {
    double y = bias;
    for (std::size_t i = 0; i < kInputDims; ++i) y += linear[i] * x[i];
    for (std::size_t i = 0; i < kInputDims; ++i)
        for (std::size_t k = i; k < kInputDims; ++k) y += quadratic[i][k] * x[i] * x[k];
    if (amplitude != 0.0) {
        double arg = phase;
        for (std::size_t i = 0; i < kInputDims; ++i) arg += frequency[i] * x[i];
        y += amplitude * std::sin(arg);
    }
    return y;
}

InputPoint ResponseSurface::gradient(const InputPoint& x) const {
    InputPoint g = linear;
    for (std::size_t i = 0; i < kInputDims; ++i)
        for (std::size_t k = i; k < kInputDims; ++k) {
            g[i] += quadratic[i][k] * x[k];
            g[k] += quadratic[i][k] * x[i];
        }
    if (amplitude != 0.0) {
        double arg = phase;
        for (std::size_t i = 0; i < kInputDims; ++i) arg += frequency[i] * x[i];
        const double c = amplitude * std::cos(arg);
        for (std::size_t i = 0; i < kInputDims; ++i) g[i] += c * frequency[i];
    }
    return g;
}

ResponseSurface ResponseSurface::constant_value(double c) {
    ResponseSurface s;
    s.kind = ResponseKind::constant;
    s.bias = c;
    return s;
}

ResponseSurface ResponseSurface::linear_form(const InputPoint& a, double bias) {
    ResponseSurface s;
    s.kind = ResponseKind::linear;
    s.linear = a;
    s.bias = bias;
    return s;
}

void OracleSpec::validate() const {
    if (surfaces.size() != kOutputDims || noise_std.size() != kOutputDims)
        throw Error(ErrorKind::validation, "oracle spec needs 64 surfaces and noise levels");
    for (const auto& s : surfaces) {
        bool finite = std::isfinite(s.bias) && std::isfinite(s.amplitude) && std::isfinite(s.phase);
        for (std::size_t i = 0; i < kInputDims; ++i) {
            finite = finite && std::isfinite(s.linear[i]) && std::isfinite(s.frequency[i]);
            for (std::size_t k = 0; k < kInputDims; ++k) finite = finite && std::isfinite(s.quadratic[i][k]);
        }
        if (!finite) throw Error(ErrorKind::validation, "oracle coefficients must be finite");
    }
    for (double n : noise_std)
        if (!(n >= 0.0) || !std::isfinite(n)) throw Error(ErrorKind::validation, "noise_std must be >= 0");
}

OracleSpec OracleSpec::standard(std::uint64_t seed) {
    OracleSpec spec;
    spec.seed = seed;
    spec.surfaces.resize(kOutputDims);
    spec.noise_std.assign(kOutputDims, 0.0);
    Rng rng(derive_seed(seed, 0x5eedULL));
    auto coef = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        // Magnitudes 10^-1 .. 10^2 so standardization matters.
        const double magnitude = std::pow(10.0, coef(-1.0, 2.0));
        auto& s = spec.surfaces[j];
        s.bias = magnitude * coef(-1.0, 1.0);
        if (j < 16) {
            s.kind = ResponseKind::linear;
            for (auto& a : s.linear) a = magnitude * coef(-3.0, 3.0);
        } else if (j < 32) {
            s.kind = ResponseKind::quadratic;
            for (auto& a : s.linear) a = magnitude * coef(-2.0, 2.0);
            for (std::size_t i = 0; i < kInputDims; ++i) s.quadratic[i][i] = magnitude * coef(-4.0, 4.0);
            for (int t = 0; t < 3; ++t) {
                const auto i = rng.below(kInputDims);
                auto k = rng.below(kInputDims - 1);
                if (k >= i) ++k;
                s.quadratic[std::min(i, k)][std::max(i, k)] += magnitude * coef(-4.0, 4.0);
            }
        } else if (j < 48) {
            s.kind = ResponseKind::smooth_mix;
            for (int t = 0; t < 3; ++t) {
                const auto i = rng.below(kInputDims);
                auto k = rng.below(kInputDims - 1);
                if (k >= i) ++k;
                s.quadratic[std::min(i, k)][std::max(i, k)] += magnitude * coef(-6.0, 6.0);
            }
            for (auto& a : s.linear) a = magnitude * coef(-1.0, 1.0);
            s.amplitude = magnitude * coef(0.5, 1.5);
            for (auto& w : s.frequency) w = coef(-4.0, 4.0);
            s.phase = coef(0.0, 6.283185307179586);
        } else {
            s.kind = ResponseKind::constant;
        }
    }
    return spec;
}

void OracleSpec::set_relative_noise(double fraction, std::size_t n_probe) {
    if (!(fraction >= 0.0)) throw Error(ErrorKind::validation, "noise fraction must be >= 0");
    OutputVector lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    Rng rng(derive_seed(seed, 0x0b5e));
    for (std::size_t n = 0; n < n_probe; ++n) {
        const auto x = uniform_sample(rng).ratios();
        for (std::size_t j = 0; j < kOutputDims; ++j) {
            const double y = surfaces[j].value(x);
            lo[j] = std::min(lo[j], y);
            hi[j] = std::max(hi[j], y);
        }
    }
    noise_std.resize(kOutputDims);
    for (std::size_t j = 0; j < kOutputDims; ++j) noise_std[j] = fraction * (hi[j] - lo[j]);
}

OutputVector analytic_output(const OracleSpec& spec, const InputPoint& x) {
    OutputVector y;
    for (std::size_t j = 0; j < kOutputDims; ++j) y[j] = spec.surfaces[j].value(x);
    return y;
}

InputPoint analytic_gradient(const OracleSpec& spec, const InputPoint& x, std::size_t j) {
    if (j >= spec.surfaces.size()) throw Error(ErrorKind::validation, "output index out of range", "output_index");
    return spec.surfaces[j].gradient(x);
}

Dataset generate(const OracleSpec& spec, std::size_t n_samples, std::uint64_t seed,
                 const ColumnSchema& schema) {
    spec.validate();
    schema.validate();
    std::vector<SampleRecord> records(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n) {
        Rng rng(derive_seed(seed, n));
        auto& rec = records[n];
        rec.id = n;
        rec.input = uniform_sample(rng);
        rec.output = analytic_output(spec, rec.input.ratios());
        for (std::size_t j = 0; j < kOutputDims; ++j)
            if (spec.noise_std[j] > 0.0) rec.output[j] += spec.noise_std[j] * rng.normal();
    }
    return Dataset(schema, std::move(records));
}

}  // namespace mixmap

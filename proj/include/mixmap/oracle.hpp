#pragma once

#include <string>
#include <vector>

#include "mixmap/dataset.hpp"

namespace mixmap {

enum class ResponseKind { linear, quadratic, smooth_mix, constant };

const char* to_string(ResponseKind kind);

// One analytic response surface over the 6 input ratios:
//   y = bias + a.x + sum_{i<=k} q_ik x_i x_k + amplitude * sin(w.x + phase)
// The kind records which terms are in play; unused terms are zero.
struct ResponseSurface {
    ResponseKind kind = ResponseKind::constant;
    double bias = 0.0;
    InputPoint linear{};
    std::array<std::array<double, kInputDims>, kInputDims> quadratic{};  // upper triangle used
    double amplitude = 0.0;
    InputPoint frequency{};
    double phase = 0.0;

    double value(const InputPoint& x) const;
    InputPoint gradient(const InputPoint& x) const;

    static ResponseSurface constant_value(double c);
    static ResponseSurface linear_form(const InputPoint& a, double bias = 0.0);
};

struct OracleSpec {
    std::vector<ResponseSurface> surfaces;  // one per output dimension
    std::vector<double> noise_std;          // absolute, per output dimension
    std::uint64_t seed = 0;

    void validate() const;

    // dims 0-15 linear, 16-31 quadratic, 32-47 smooth-mix, 48-63 constant,
    // with per-dim magnitudes spanning several orders to mimic mixed units.
    static OracleSpec standard(std::uint64_t seed);

    // Sets noise_std[j] = fraction * range_j, where range_j is the spread of
    // the noiseless surface over `n_probe` uniform simplex samples.
    void set_relative_noise(double fraction, std::size_t n_probe = 20000);
};

OutputVector analytic_output(const OracleSpec& spec, const InputPoint& x);
InputPoint analytic_gradient(const OracleSpec& spec, const InputPoint& x, std::size_t j);

// Inputs uniform on the simplex, outputs analytic plus Gaussian noise.
// Deterministic per seed; row i uses an RNG stream derived from (seed, i).
Dataset generate(const OracleSpec& spec, std::size_t n_samples, std::uint64_t seed,
                 const ColumnSchema& schema = ColumnSchema::generic());

}  // namespace mixmap

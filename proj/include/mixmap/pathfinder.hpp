#pragma once

#include <optional>
#include <vector>

#include "mixmap/embedding.hpp"
#include "mixmap/neighbors.hpp"
#include "mixmap/surrogate.hpp"

namespace mixmap {

inline constexpr std::size_t kDefaultPathSteps = 21;

// Lambda follows x_lambda = lambda * x0 + (1 - lambda) * x1, so the grid runs
// from 1 (x0) down to 0 (x1).
std::vector<double> lambda_grid(std::size_t n_steps);

std::vector<InputMixture> interpolate_inputs(const InputMixture& x0, const InputMixture& x1, std::size_t n_steps);

struct PathStep {
    double lambda = 0.0;
    InputMixture input;
    OutputVector predicted{};
    RecordId snapped_id = 0;
    double snap_distance = 0.0;
    Point2 embed_xy{};
};

struct PathEndpoint {
    std::optional<RecordId> record;
    InputMixture mixture;
};

struct InterpolationPath {
    PathEndpoint from;
    PathEndpoint to;
    std::vector<PathStep> steps;
};

// Predicts every step with the surrogate, snaps to the nearest record of
// `snap_index` (standardized output distance) and looks up its coordinates.
InterpolationPath trace_path(const MixtureModel& model, const OutputIndex& snap_index, const EmbeddingMap& embedding,
                             const PathEndpoint& from, const PathEndpoint& to, std::size_t n_steps = kDefaultPathSteps,
                             int threads = 1);

struct OutputSeries {
    std::size_t output_index = 0;
    std::vector<double> values;          // surrogate prediction per step
    std::vector<double> snapped_values;  // dataset output of the snapped record
};

OutputSeries output_series(const InterpolationPath& path, const Dataset& dataset, std::size_t j);

struct StepPreview {
    std::size_t step_index = 0;
    double lambda = 0.0;
    InputMixture input;
    OutputVector predicted{};
    SampleRecord snapped;
    double snap_distance = 0.0;
    Point2 embed_xy{};
};

StepPreview step_preview(const InterpolationPath& path, const Dataset& dataset, std::size_t step_index);

}  // namespace mixmap

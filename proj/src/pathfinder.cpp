#include "mixmap/pathfinder.hpp"

#include <algorithm>

namespace mixmap {

std::vector<double> lambda_grid(std::size_t n_steps) {
    if (n_steps < 2) throw Error(ErrorKind::validation, "a path needs at least 2 steps", "steps");
    std::vector<double> grid(n_steps);
    const double denom = static_cast<double>(n_steps - 1);
    for (std::size_t s = 0; s < n_steps; ++s) grid[s] = 1.0 - static_cast<double>(s) / denom;
    grid.front() = 1.0;
    grid.back() = 0.0;
    return grid;
}

std::vector<InputMixture> interpolate_inputs(const InputMixture& x0, const InputMixture& x1, std::size_t n_steps) {
    const auto grid = lambda_grid(n_steps);
    std::vector<InputMixture> out;
    out.reserve(n_steps);
    for (std::size_t s = 0; s < n_steps; ++s) {
        // Endpoints are copies so they reproduce the anchors bit for bit.
        if (s == 0) {
            out.push_back(x0);
            continue;
        }
        if (s + 1 == n_steps) {
            out.push_back(x1);
            continue;
        }
        const double lambda = grid[s];
        InputPoint r;
        for (std::size_t i = 0; i < kInputDims; ++i)
            r[i] = std::clamp(x1[i] + lambda * (x0[i] - x1[i]), 0.0, 1.0);
        out.push_back(InputMixture::trusted(r));
    }
    return out;
}

InterpolationPath trace_path(const MixtureModel& model, const OutputIndex& snap_index, const EmbeddingMap& embedding,
                             const PathEndpoint& from, const PathEndpoint& to, std::size_t n_steps, int threads) {
    const auto grid = lambda_grid(n_steps);
    const auto inputs = interpolate_inputs(from.mixture, to.mixture, n_steps);
    InterpolationPath path{from, to, std::vector<PathStep>(n_steps)};
    parallel_for(n_steps, threads, [&](std::size_t s) {
        PathStep& step = path.steps[s];
        step.lambda = grid[s];
        step.input = inputs[s];
        step.predicted = model.predict(step.input.ratios());
        const auto hit = snap_index.nearest(step.predicted);
        step.snapped_id = hit.id;
        step.snap_distance = hit.distance;
        step.embed_xy = embed_coordinates(embedding, hit.id);
    });
    return path;
}

OutputSeries output_series(const InterpolationPath& path, const Dataset& dataset, std::size_t j) {
    if (j >= kOutputDims) throw Error(ErrorKind::validation, "output index out of range", "output_index");
    if (path.steps.empty()) throw Error(ErrorKind::state, "path has no steps");
    OutputSeries s;
    s.output_index = j;
    for (const auto& step : path.steps) {
        s.values.push_back(step.predicted[j]);
        s.snapped_values.push_back(dataset.record(step.snapped_id).output[j]);
    }
    return s;
}

StepPreview step_preview(const InterpolationPath& path, const Dataset& dataset, std::size_t step_index) {
    if (step_index >= path.steps.size())
        throw Error(ErrorKind::validation,
                    "step index " + std::to_string(step_index) + " out of range (path has " +
                        std::to_string(path.steps.size()) + " steps)",
                    "step_index");
    const auto& st = path.steps[step_index];
    return StepPreview{step_index, st.lambda, st.input, st.predicted, dataset.record(st.snapped_id),
                       st.snap_distance, st.embed_xy};
}

}  // namespace mixmap

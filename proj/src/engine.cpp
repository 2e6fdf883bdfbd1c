#include "mixmap/engine.hpp"

namespace mixmap {

namespace {

DatasetPtr with_stats(DatasetPtr ds) {
    if (!ds || ds->empty()) throw Error(ErrorKind::state, "engine needs a non-empty dataset");
    if (!ds->has_stats()) throw Error(ErrorKind::state, "dataset stats must be computed before building the engine");
    return ds;
}

std::shared_ptr<const EmbeddingMap> require_map(std::shared_ptr<const EmbeddingMap> map) {
    if (!map) throw Error(ErrorKind::state, "engine needs an output-space embedding");
    return map;
}

}  // namespace

Engine::Engine(DatasetPtr dataset, std::shared_ptr<const SurrogateEnsemble> model,
               std::shared_ptr<const EmbeddingMap> output_map, std::shared_ptr<const EmbeddingMap> input_map,
               EngineConfig config)
    : dataset_(with_stats(std::move(dataset))),
      model_(std::move(model)),
      output_map_(require_map(std::move(output_map))),
      input_map_(std::move(input_map)),
      config_(config),
      input_index_(dataset_),
      output_index_(dataset_),
      snap_index_(dataset_, output_map_->rows_in(*dataset_)) {
    if (!model_) throw Error(ErrorKind::state, "engine needs a trained surrogate");
    if (model_->dataset_fingerprint() != dataset_->fingerprint())
        throw Error(ErrorKind::validation, "surrogate was trained on a different dataset");
    if (output_map_->space() != EmbeddingSpace::output)
        throw Error(ErrorKind::validation, "output embedding map has the wrong space");
    if (input_map_) {
        if (input_map_->space() != EmbeddingSpace::input)
            throw Error(ErrorKind::validation, "input embedding map has the wrong space");
        input_map_->rows_in(*dataset_);
    }
    if (!(config_.beta >= 0.0)) throw Error(ErrorKind::validation, "beta must be non-negative", "beta");
    if (config_.default_k < 1) throw Error(ErrorKind::validation, "default k must be positive", "k");
    if (config_.default_steps < 2) throw Error(ErrorKind::validation, "default steps must be >= 2", "steps");
    config_.sensitivity.validate();
}

const EmbeddingMap& Engine::map(EmbeddingSpace space) const {
    if (space == EmbeddingSpace::output) return *output_map_;
    if (!input_map_) throw Error(ErrorKind::not_found, "no input-space embedding loaded", "space");
    return *input_map_;
}

}  // namespace mixmap

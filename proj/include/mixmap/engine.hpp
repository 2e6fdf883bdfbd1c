#pragma once

#include <memory>

#include "mixmap/embedding.hpp"
#include "mixmap/neighbors.hpp"
#include "mixmap/sensitivity.hpp"
#include "mixmap/surrogate.hpp"

namespace mixmap {

struct EngineConfig {
    double beta = 4.0;  // emphasis boost on adjusted outputs
    std::size_t default_k = 10;
    std::size_t default_steps = 21;
    SmoothGradConfig sensitivity;
};

// Immutable bundle of everything a session reads: dataset, surrogate,
// embeddings and the neighbor indexes built over them.
class Engine {
public:
    Engine(DatasetPtr dataset, std::shared_ptr<const SurrogateEnsemble> model,
           std::shared_ptr<const EmbeddingMap> output_map, std::shared_ptr<const EmbeddingMap> input_map = nullptr,
           EngineConfig config = {});

    const Dataset& dataset() const { return *dataset_; }
    const DatasetPtr& dataset_ptr() const { return dataset_; }
    const NormalizationStats& stats() const { return dataset_->stats(); }
    const SurrogateEnsemble& model() const { return *model_; }
    const EmbeddingMap& output_map() const { return *output_map_; }
    const EmbeddingMap* input_map() const { return input_map_.get(); }
    const EmbeddingMap& map(EmbeddingSpace space) const;

    const InputIndex& input_index() const { return input_index_; }
    const OutputIndex& output_index() const { return output_index_; }
    // Output index restricted to records present in the output embedding.
    const OutputIndex& snap_index() const { return snap_index_; }

    const EngineConfig& config() const { return config_; }

private:
    DatasetPtr dataset_;
    std::shared_ptr<const SurrogateEnsemble> model_;
    std::shared_ptr<const EmbeddingMap> output_map_;
    std::shared_ptr<const EmbeddingMap> input_map_;
    EngineConfig config_;
    InputIndex input_index_;
    OutputIndex output_index_;
    OutputIndex snap_index_;
};

}  // namespace mixmap

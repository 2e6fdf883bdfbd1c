#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mixmap/dataset.hpp"
#include "mixmap/neighbors.hpp"

namespace mixmap {

// Anything that maps a point of the input box to the 64 outputs. Inputs are
// raw points: sensitivity probes evaluate slightly off the simplex.
class MixtureModel {
public:
    virtual ~MixtureModel() = default;

    virtual double predict_single(const InputPoint& x, std::size_t j) const = 0;

    virtual OutputVector predict(const InputPoint& x) const {
        OutputVector y;
        for (std::size_t j = 0; j < kOutputDims; ++j) y[j] = predict_single(x, j);
        return y;
    }

    // Observed extent of each input ratio; sensitivity noise and steps are
    // expressed as fractions of it.
    virtual InputPoint input_range() const {
        InputPoint r;
        r.fill(1.0);
        return r;
    }
};

struct TrainConfig {
    int n_trees = 200;
    int max_depth = 6;
    double learning_rate = 0.1;
    int histogram_bins = 64;
    int min_samples_leaf = 20;
    double row_subsample = 0.8;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
    int knn_k = 5;
    double blend_gamma = 0.5;
    int threads = 0;  // 0: hardware concurrency; never affects results

    void validate() const;
};

// Binary tree with threshold routing: go left iff x[feature] <= threshold.
struct RegressionTree {
    std::vector<std::int8_t> feature;  // -1 marks a leaf
    std::vector<double> threshold;
    std::vector<std::int32_t> left;
    std::vector<std::int32_t> right;
    std::vector<double> value;

    double predict(const InputPoint& x) const {
        std::int32_t n = 0;
        while (feature[n] >= 0) n = x[feature[n]] <= threshold[n] ? left[n] : right[n];
        return value[n];
    }

    std::size_t size() const { return feature.size(); }
    int depth() const;
};

// predict(x) = base_score + learning_rate * sum_t tree_t(x)
struct BoostedModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;
    // Training-set MSE before the first tree and after every round.
    std::vector<double> train_mse;

    double predict(const InputPoint& x) const { return predict_prefix(x, trees.size()); }
    double predict_prefix(const InputPoint& x, std::size_t n_trees) const;
};

// Inverse-distance weighted kNN regression over the training rows; an exact
// input match returns that record's outputs.
class KnnRegressor {
public:
    KnnRegressor(DatasetPtr dataset, std::vector<std::size_t> rows, int k);

    OutputVector predict(const InputPoint& x) const;
    double predict_single(const InputPoint& x, std::size_t j) const;
    int k() const { return k_; }

private:
    std::shared_ptr<const InputIndex> index_;
    int k_;
};

class SurrogateEnsemble : public MixtureModel {
public:
    SurrogateEnsemble(TrainConfig config, std::vector<BoostedModel> models, KnnRegressor knn,
                      InputPoint input_min, InputPoint input_max, std::string dataset_fingerprint,
                      std::vector<std::size_t> training_rows, std::vector<std::size_t> holdout_rows);

    double predict_single(const InputPoint& x, std::size_t j) const override;
    OutputVector predict(const InputPoint& x) const override;
    OutputVector predict(const InputMixture& x) const { return predict(x.ratios()); }
    InputPoint input_range() const override;

    double boosted(const InputPoint& x, std::size_t j) const { return models_[j].predict(x); }
    double knn(const InputPoint& x, std::size_t j) const { return knn_.predict_single(x, j); }

    double gamma() const { return config_.blend_gamma; }
    void set_gamma(double gamma);

    const TrainConfig& config() const { return config_; }
    const std::vector<BoostedModel>& models() const { return models_; }
    const KnnRegressor& knn_regressor() const { return knn_; }
    const std::string& dataset_fingerprint() const { return dataset_fingerprint_; }
    const std::vector<std::size_t>& training_rows() const { return training_rows_; }
    const std::vector<std::size_t>& holdout_rows() const { return holdout_rows_; }

    std::string serialize() const;
    static SurrogateEnsemble deserialize(const std::string& bytes, DatasetPtr dataset);
    void save(const std::filesystem::path& path) const;
    static SurrogateEnsemble load(const std::filesystem::path& path, DatasetPtr dataset);
    std::string fingerprint() const;

private:
    TrainConfig config_;
    std::vector<BoostedModel> models_;
    KnnRegressor knn_;
    InputPoint input_min_, input_max_;
    std::string dataset_fingerprint_;
    std::vector<std::size_t> training_rows_, holdout_rows_;
};

struct HoldoutSplit {
    std::vector<std::size_t> training;
    std::vector<std::size_t> holdout;
};

// Seeded permutation; the last `fraction` of it is held out. Both lists sorted.
HoldoutSplit split_holdout(std::size_t n, double fraction, std::uint64_t seed);

// Fits one boosted model per output on the training split.
SurrogateEnsemble train(DatasetPtr dataset, const TrainConfig& config);

// Fits a single boosted model; exposed for tests and tools.
BoostedModel fit_boosted(const std::vector<InputPoint>& inputs, const std::vector<double>& targets,
                         const TrainConfig& config, std::uint64_t stream);

struct DimensionScore {
    double r2 = 0.0;
    double rmse = 0.0;
    bool constant = false;  // holdout target has zero spread
};

std::vector<DimensionScore> evaluate(const MixtureModel& model, const Dataset& holdout);

}  // namespace mixmap

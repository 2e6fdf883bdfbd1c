#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixmap/dataset.hpp"

namespace mixmap {

using Point2 = std::array<double, 2>;

struct TsneConfig {
    double perplexity = 30.0;
    int n_iter = 1000;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    double learning_rate = 200.0;
    double momentum_initial = 0.5;
    double momentum_final = 0.8;
    int momentum_switch = 250;
    double theta = 0.5;  // Barnes-Hut accuracy; 0 selects the exact O(N^2) gradient
    std::uint64_t seed = 0;
    std::size_t subsample_cap = 50000;
    int kl_every = 50;
    int threads = 0;

    void validate() const;
    void validate_for(std::size_t n_points) const;
};

// Dense row-major point set.
struct PointMatrix {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    const double* row(std::size_t i) const { return values.data() + i * dim; }
};

// Input affinities: per-point conditional distributions over the nearest
// 3*perplexity neighbors, and the symmetrized joint P in CSR form.
struct AffinitySet {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> cond_neighbors;  // n * k
    std::vector<double> cond_p;                 // n * k, rows sum to 1
    std::vector<double> beta;                   // per-point precision 1/(2 sigma^2)

    std::vector<std::size_t> row_ptr;  // n + 1
    std::vector<std::uint32_t> col;
    std::vector<double> p;

    double total() const;
    double conditional_entropy_bits(std::size_t i) const;
    double joint(std::size_t i, std::size_t j) const;  // 0 if absent
};

AffinitySet compute_affinities(const PointMatrix& points, double perplexity, int threads = 0);

struct KlSample {
    int iteration = 0;
    double kl = 0.0;
};

struct TsneResult {
    std::vector<Point2> coords;
    std::vector<KlSample> kl_trace;
};

TsneResult tsne(const PointMatrix& points, const TsneConfig& config);

enum class EmbeddingSpace { output, input };

const char* to_string(EmbeddingSpace space);
EmbeddingSpace parse_space(const std::string& s);

class EmbeddingMap {
public:
    EmbeddingMap() = default;
    EmbeddingMap(EmbeddingSpace space, std::vector<RecordId> ids, std::vector<Point2> coords);

    EmbeddingSpace space() const { return space_; }
    const std::vector<RecordId>& ids() const { return ids_; }
    const std::vector<Point2>& coords() const { return coords_; }
    std::size_t size() const { return ids_.size(); }

    std::optional<Point2> find(RecordId id) const;
    bool contains(RecordId id) const { return find(id).has_value(); }

    // Dataset rows covered by this map; throws if an id is not in the dataset.
    std::vector<std::size_t> rows_in(const Dataset& dataset) const;

    std::vector<KlSample> kl_trace;
    TsneConfig config;
    std::string dataset_fingerprint;

    std::string fingerprint() const;
    void save(const std::filesystem::path& path) const;
    // Also accepts externally computed embeddings: "id,x,y" rows, '#' header
    // lines optional.
    static EmbeddingMap load(const std::filesystem::path& path);

private:
    EmbeddingSpace space_ = EmbeddingSpace::output;
    std::vector<RecordId> ids_;  // ascending
    std::vector<Point2> coords_;
};

// Uniform sample without replacement, ascending; identity when n <= cap.
std::vector<RecordId> subsample(const Dataset& dataset, std::size_t cap, std::uint64_t seed);

// Standardized outputs (constant dims zero) or raw input ratios.
PointMatrix embedding_points(const Dataset& dataset, EmbeddingSpace space, std::span<const RecordId> ids);

EmbeddingMap embed_dataset(const Dataset& dataset, EmbeddingSpace space, const TsneConfig& config);

// Throws Error(not_found) for ids excluded by subsampling.
Point2 embed_coordinates(const EmbeddingMap& map, RecordId id);

}  // namespace mixmap

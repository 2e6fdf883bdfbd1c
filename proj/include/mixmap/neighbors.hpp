#pragma once

#include <memory>
#include <span>
#include <vector>

#include "mixmap/dataset.hpp"

namespace mixmap {

struct NeighborHit {
    RecordId id = 0;
    double distance = 0.0;

    friend bool operator==(const NeighborHit&, const NeighborHit&) = default;
};

// Per-dimension weights and scales for output-space distances:
//   d(y, t) = sqrt(sum_j w_j * ((y_j - t_j) / s_j)^2)
struct WeightedMetric {
    OutputVector weights{};
    OutputVector scales{};

    void validate() const;

    // Unit weights, std scales; constant dims get weight 0 and scale 1.
    static WeightedMetric standardized(const NormalizationStats& stats);

    // weight_j = 1 + beta on adjusted dims, 1 elsewhere (0 on constant dims).
    static WeightedMetric emphasized(const NormalizationStats& stats,
                                     std::span<const std::size_t> adjusted, double beta);
};

// Exact kNN over raw input ratios backed by a kd-tree.
class InputIndex {
public:
    InputIndex(DatasetPtr dataset);
    InputIndex(DatasetPtr dataset, std::vector<std::size_t> rows);

    std::vector<NeighborHit> query(const InputPoint& query, std::size_t k) const;
    std::vector<NeighborHit> query(const InputMixture& q, std::size_t k) const {
        return query(q.ratios(), k);
    }

    // Same as query() but returns dataset rows and squared distances.
    std::vector<std::pair<std::size_t, double>> query_rows(const InputPoint& query, std::size_t k) const;

    std::size_t size() const { return points_.size(); }
    const Dataset& dataset() const { return *dataset_; }

private:
    struct Node {
        InputPoint lo, hi;
        std::uint32_t begin = 0, end = 0;  // range into points_ for leaves
        std::int32_t left = -1, right = -1;
    };
    std::int32_t build(std::uint32_t begin, std::uint32_t end);

    DatasetPtr dataset_;
    // Points permuted into kd-tree order; rows_[i] is the dataset row of points_[i].
    std::vector<InputPoint> points_;
    std::vector<std::size_t> rows_;
    std::vector<Node> nodes_;
};

// Exact kNN over standardized (optionally re-weighted) outputs. Brute force
// scan with early abandon; optionally restricted to a subset of rows.
class OutputIndex {
public:
    OutputIndex(DatasetPtr dataset);
    OutputIndex(DatasetPtr dataset, std::vector<std::size_t> rows);

    std::vector<NeighborHit> query(std::span<const double> target, const WeightedMetric& metric,
                                   std::size_t k) const;

    // Unweighted standardized argmin; equals query(..., standardized, 1)[0].
    NeighborHit nearest(std::span<const double> predicted) const;

    std::size_t size() const { return rows_.size(); }
    const Dataset& dataset() const { return *dataset_; }
    const std::vector<std::size_t>& rows() const { return rows_; }

private:
    DatasetPtr dataset_;
    std::vector<std::size_t> rows_;
    WeightedMetric unit_;
};

struct SimilarityScores {
    std::vector<RecordId> ids;
    std::vector<double> scores;
};

// similarity_i = 1 - d_i / d_max over standardized output distance to the
// selected record.
SimilarityScores similarity_scores(const Dataset& dataset, RecordId selected);

}  // namespace mixmap

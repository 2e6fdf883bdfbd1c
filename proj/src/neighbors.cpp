#include "mixmap/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace mixmap {

namespace {

constexpr std::uint32_t kLeafSize = 16;

// Max-heap on (squared distance, row): the top is the current worst hit.
struct Candidate {
    double d2;
    std::size_t row;
    bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && row < o.row); }
};

class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) {}

    bool full() const { return heap_.size() == k_; }
    double worst() const { return heap_.top().d2; }

    void offer(double d2, std::size_t row) {
        Candidate c{d2, row};
        if (!full()) {
            heap_.push(c);
        } else if (c < heap_.top()) {
            heap_.pop();
            heap_.push(c);
        }
    }

    std::vector<Candidate> sorted() && {
        std::vector<Candidate> out;
        out.reserve(heap_.size());
        while (!heap_.empty()) {
            out.push_back(heap_.top());
            heap_.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    std::size_t k_;
    std::priority_queue<Candidate> heap_;
};

void require_k(std::size_t k) {
    if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be at least 1", "k");
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// WeightedMetric

void WeightedMetric::validate() const {
    bool any_positive = false;
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        if (!(weights[j] >= 0.0) || !std::isfinite(weights[j]))
            throw Error(ErrorKind::validation, "metric weights must be finite and non-negative", "weights");
        if (!(scales[j] > 0.0) || !std::isfinite(scales[j]))
            throw Error(ErrorKind::validation, "metric scales must be finite and positive", "scales");
        any_positive = any_positive || weights[j] > 0.0;
    }
    if (!any_positive) throw Error(ErrorKind::validation, "metric needs at least one positive weight", "weights");
}

WeightedMetric WeightedMetric::standardized(const NormalizationStats& stats) {
    WeightedMetric m;
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        m.weights[j] = stats.output_constant[j] ? 0.0 : 1.0;
        m.scales[j] = stats.scale(j);
    }
    return m;
}

WeightedMetric WeightedMetric::emphasized(const NormalizationStats& stats,
                                          std::span<const std::size_t> adjusted, double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw Error(ErrorKind::validation, "beta must be finite and non-negative", "beta");
    WeightedMetric m = standardized(stats);
    for (std::size_t j : adjusted) {
        if (j >= kOutputDims) throw Error(ErrorKind::validation, "output index out of range", "output_index");
        if (!stats.output_constant[j]) m.weights[j] = 1.0 + beta;
    }
    return m;
}

// ---------------------------------------------------------------------------
// InputIndex

InputIndex::InputIndex(DatasetPtr dataset) : InputIndex(dataset, all_rows(*dataset)) {}

InputIndex::InputIndex(DatasetPtr dataset, std::vector<std::size_t> rows)
    : dataset_(std::move(dataset)), rows_(std::move(rows)) {
    if (rows_.empty()) throw Error(ErrorKind::state, "cannot index an empty dataset");
    std::sort(rows_.begin(), rows_.end());
    points_.reserve(rows_.size());
    for (std::size_t r : rows_) points_.push_back((*dataset_)[r].input.ratios());
    nodes_.reserve(2 * rows_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t InputIndex::build(std::uint32_t begin, std::uint32_t end) {
    Node node;
    node.lo.fill(std::numeric_limits<double>::infinity());
    node.hi.fill(-std::numeric_limits<double>::infinity());
    for (std::uint32_t i = begin; i < end; ++i)
        for (std::size_t d = 0; d < kInputDims; ++d) {
            node.lo[d] = std::min(node.lo[d], points_[i][d]);
            node.hi[d] = std::max(node.hi[d], points_[i][d]);
        }
    node.begin = begin;
    node.end = end;
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    std::size_t axis = 0;
    for (std::size_t d = 1; d < kInputDims; ++d)
        if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis]) axis = d;
    if (node.hi[axis] == node.lo[axis]) return id;  // all points identical

    // Permute points_ and rows_ together via an index sort.
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::vector<std::uint32_t> order(end - begin);
    std::iota(order.begin(), order.end(), begin);
    std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] < points_[b][axis] ||
                                (points_[a][axis] == points_[b][axis] && rows_[a] < rows_[b]);
                     });
    std::vector<InputPoint> pts(order.size());
    std::vector<std::size_t> rws(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        pts[i] = points_[order[i]];
        rws[i] = rows_[order[i]];
    }
    std::copy(pts.begin(), pts.end(), points_.begin() + begin);
    std::copy(rws.begin(), rws.end(), rows_.begin() + begin);

    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<std::pair<std::size_t, double>> InputIndex::query_rows(const InputPoint& q, std::size_t k) const {
    require_k(k);
    TopK top(std::min(k, points_.size()));

    auto box_d2 = [&](const Node& n) {
        double s = 0.0;
        for (std::size_t d = 0; d < kInputDims; ++d) {
            double gap = 0.0;
            if (q[d] < n.lo[d]) gap = n.lo[d] - q[d];
            else if (q[d] > n.hi[d]) gap = q[d] - n.hi[d];
            s += gap * gap;
        }
        return s;
    };

    // Iterative depth-first search, nearer child first.
    std::vector<std::pair<std::int32_t, double>> stack;
    stack.emplace_back(0, box_d2(nodes_[0]));
    while (!stack.empty()) {
        auto [id, bound] = stack.back();
        stack.pop_back();
        if (top.full() && bound > top.worst()) continue;
        const Node& n = nodes_[id];
        if (n.left < 0) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                double s = 0.0;
                for (std::size_t d = 0; d < kInputDims; ++d) {
                    const double diff = points_[i][d] - q[d];
                    s += diff * diff;
                }
                top.offer(s, rows_[i]);
            }
            continue;
        }
        const double bl = box_d2(nodes_[n.left]);
        const double br = box_d2(nodes_[n.right]);
        if (bl <= br) {
            stack.emplace_back(n.right, br);
            stack.emplace_back(n.left, bl);
        } else {
            stack.emplace_back(n.left, bl);
            stack.emplace_back(n.right, br);
        }
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& c : std::move(top).sorted()) out.emplace_back(c.row, c.d2);
    return out;
}

std::vector<NeighborHit> InputIndex::query(const InputPoint& q, std::size_t k) const {
    std::vector<NeighborHit> hits;
    for (const auto& [row, d2] : query_rows(q, k)) hits.push_back({(*dataset_)[row].id, std::sqrt(d2)});
    return hits;
}

// ---------------------------------------------------------------------------
// OutputIndex

OutputIndex::OutputIndex(DatasetPtr dataset) : OutputIndex(dataset, all_rows(*dataset)) {}

OutputIndex::OutputIndex(DatasetPtr dataset, std::vector<std::size_t> rows)
    : dataset_(std::move(dataset)), rows_(std::move(rows)) {
    if (rows_.empty()) throw Error(ErrorKind::state, "cannot index an empty dataset");
    std::sort(rows_.begin(), rows_.end());
    rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
    unit_ = WeightedMetric::standardized(dataset_->stats());
}

std::vector<NeighborHit> OutputIndex::query(std::span<const double> target, const WeightedMetric& metric,
                                            std::size_t k) const {
    require_k(k);
    if (target.size() != kOutputDims)
        throw Error(ErrorKind::validation, "target must have 64 values", "target");
    metric.validate();

    TopK top(std::min(k, rows_.size()));
    for (std::size_t row : rows_) {
        const auto& y = (*dataset_)[row].output;
        const double bound = top.full() ? top.worst() : std::numeric_limits<double>::infinity();
        double s = 0.0;
        std::size_t j = 0;
        for (; j < kOutputDims; ++j) {
            const double z = (y[j] - target[j]) / metric.scales[j];
            s += metric.weights[j] * (z * z);
            if (s > bound) break;
        }
        if (j == kOutputDims) top.offer(s, row);
    }
    std::vector<NeighborHit> hits;
    for (const auto& c : std::move(top).sorted()) hits.push_back({(*dataset_)[c.row].id, std::sqrt(c.d2)});
    return hits;
}

NeighborHit OutputIndex::nearest(std::span<const double> predicted) const {
    return query(predicted, unit_, 1).front();
}

// ---------------------------------------------------------------------------
// Similarity

SimilarityScores similarity_scores(const Dataset& dataset, RecordId selected) {
    const auto& sel = dataset.record(selected).output;
    const auto metric = WeightedMetric::standardized(dataset.stats());
    SimilarityScores out;
    out.ids.reserve(dataset.size());
    out.scores.reserve(dataset.size());
    double d_max = 0.0;
    for (const auto& rec : dataset.records()) {
        double s = 0.0;
        for (std::size_t j = 0; j < kOutputDims; ++j) {
            const double z = (rec.output[j] - sel[j]) / metric.scales[j];
            s += metric.weights[j] * (z * z);
        }
        const double d = std::sqrt(s);
        d_max = std::max(d_max, d);
        out.ids.push_back(rec.id);
        out.scores.push_back(d);
    }
    for (double& v : out.scores) v = d_max > 0.0 ? 1.0 - v / d_max : 1.0;
    return out;
}

}  // namespace mixmap

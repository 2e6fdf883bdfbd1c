#include "mixmap/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "mixmap/fingerprint.hpp"
#include "mixmap/rng.hpp"

namespace mixmap {

void TrainConfig::validate() const {
    auto fail = [](const char* field, const char* msg) { throw Error(ErrorKind::validation, msg, field); };
    if (n_trees < 1) fail("n_trees", "n_trees must be positive");
    if (max_depth < 1 || max_depth > 30) fail("max_depth", "max_depth must be in [1, 30]");
    if (!(learning_rate > 0.0) || learning_rate >= 2.0) fail("learning_rate", "learning_rate must be in (0, 2)");
    if (histogram_bins < 2 || histogram_bins > 256) fail("histogram_bins", "histogram_bins must be in [2, 256]");
    if (min_samples_leaf < 1) fail("min_samples_leaf", "min_samples_leaf must be positive");
    if (!(row_subsample > 0.0 && row_subsample <= 1.0)) fail("row_subsample", "row_subsample must be in (0, 1]");
    if (!(holdout_fraction > 0.0 && holdout_fraction <= 0.5))
        fail("holdout_fraction", "holdout_fraction must be in (0, 0.5]");
    if (knn_k < 1) fail("knn_k", "knn_k must be positive");
    if (!(blend_gamma >= 0.0 && blend_gamma <= 1.0)) fail("blend_gamma", "blend_gamma must be in [0, 1]");
    if (threads < 0) fail("threads", "threads must be non-negative");
}

int RegressionTree::depth() const {
    std::vector<int> d(feature.size(), 0);
    int best = 0;
    for (std::size_t n = 0; n < feature.size(); ++n) {
        best = std::max(best, d[n]);
        if (feature[n] >= 0) {
            d[left[n]] = d[n] + 1;
            d[right[n]] = d[n] + 1;
        }
    }
    return best;
}

double BoostedModel::predict_prefix(const InputPoint& x, std::size_t n_trees) const {
    double s = 0.0;
    for (std::size_t t = 0; t < n_trees; ++t) s += trees[t].predict(x);
    return base_score + learning_rate * s;
}

// ---------------------------------------------------------------------------
// Histogram gradient boosting

namespace {

// Quantile bin edges per feature; bin(x) = index of the first edge >= x, so
// x <= edges[b] exactly when bin(x) <= b.
struct BinnedInputs {
    std::array<std::vector<double>, kInputDims> edges;
    std::array<std::vector<std::uint8_t>, kInputDims> bins;  // column-major
    std::size_t n = 0;

    BinnedInputs(const std::vector<InputPoint>& x, int max_bins) : n(x.size()) {
        std::vector<double> col(n);
        for (std::size_t f = 0; f < kInputDims; ++f) {
            for (std::size_t i = 0; i < n; ++i) col[i] = x[i][f];
            std::sort(col.begin(), col.end());
            auto& e = edges[f];
            for (int b = 1; b < max_bins; ++b) {
                const std::size_t pos = static_cast<std::size_t>(b) * n / static_cast<std::size_t>(max_bins);
                if (pos == 0 || pos >= n) continue;
                if (col[pos - 1] == col[pos]) {
                    // Quantile falls inside a run of ties: cut after the run if possible.
                    auto it = std::upper_bound(col.begin(), col.end(), col[pos]);
                    if (it == col.end()) continue;
                    const double cut = col[pos];
                    if (e.empty() || cut > e.back()) e.push_back(cut);
                    continue;
                }
                const double cut = col[pos - 1] + 0.5 * (col[pos] - col[pos - 1]);
                if (e.empty() || cut > e.back()) e.push_back(cut);
            }
            bins[f].resize(n);
            for (std::size_t i = 0; i < n; ++i)
                bins[f][i] = static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), x[i][f]) - e.begin());
        }
    }

    std::size_t n_bins(std::size_t f) const { return edges[f].size() + 1; }
};

struct Split {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;
};

class TreeBuilder {
public:
    TreeBuilder(const BinnedInputs& data, const TrainConfig& cfg) : data_(data), cfg_(cfg) {}

    // Grows a tree on `sample` using residuals `g`; leaf values are left zero.
    RegressionTree grow(const std::vector<double>& g, std::vector<std::uint32_t> sample) {
        RegressionTree tree;
        add_node(tree);
        struct Pending {
            std::int32_t node;
            std::vector<std::uint32_t> rows;
            int depth;
        };
        std::vector<Pending> frontier;
        frontier.push_back({0, std::move(sample), 0});
        while (!frontier.empty()) {
            std::vector<Pending> next;
            for (auto& p : frontier) {
                if (p.depth >= cfg_.max_depth) continue;
                if (p.rows.size() < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf)) continue;
                const Split s = best_split(g, p.rows);
                if (s.feature < 0) continue;
                std::vector<std::uint32_t> lrows, rrows;
                const auto& col = data_.bins[s.feature];
                for (auto r : p.rows) (col[r] <= s.bin ? lrows : rrows).push_back(r);
                const auto l = add_node(tree);
                const auto r = add_node(tree);
                tree.feature[p.node] = static_cast<std::int8_t>(s.feature);
                tree.threshold[p.node] = data_.edges[s.feature][s.bin];
                tree.left[p.node] = l;
                tree.right[p.node] = r;
                split_bins_.push_back({p.node, s.bin});
                next.push_back({l, std::move(lrows), p.depth + 1});
                next.push_back({r, std::move(rrows), p.depth + 1});
            }
            frontier = std::move(next);
        }
        return tree;
    }

    // Bin of each internal node's split, for routing binned training rows.
    std::int32_t route(const RegressionTree& tree, std::uint32_t row) const {
        std::int32_t n = 0;
        while (tree.feature[n] >= 0)
            n = data_.bins[tree.feature[n]][row] <= node_bin_[n] ? tree.left[n] : tree.right[n];
        return n;
    }

    void index_bins(const RegressionTree& tree) {
        node_bin_.assign(tree.size(), -1);
        for (auto [node, bin] : split_bins_) node_bin_[node] = bin;
        split_bins_.clear();
    }

private:
    static std::int32_t add_node(RegressionTree& t) {
        t.feature.push_back(-1);
        t.threshold.push_back(0.0);
        t.left.push_back(-1);
        t.right.push_back(-1);
        t.value.push_back(0.0);
        return static_cast<std::int32_t>(t.feature.size() - 1);
    }

    Split best_split(const std::vector<double>& g, const std::vector<std::uint32_t>& rows) {
        double total = 0.0;
        for (auto r : rows) total += g[r];
        const double n = static_cast<double>(rows.size());
        const double parent = total * total / n;
        const auto min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);

        Split best;
        for (std::size_t f = 0; f < kInputDims; ++f) {
            const std::size_t nb = data_.n_bins(f);
            if (nb < 2) continue;
            sums_.assign(nb, 0.0);
            counts_.assign(nb, 0);
            const auto& col = data_.bins[f];
            for (auto r : rows) {
                sums_[col[r]] += g[r];
                ++counts_[col[r]];
            }
            double sl = 0.0;
            std::size_t cl = 0;
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                sl += sums_[b];
                cl += counts_[b];
                const std::size_t cr = rows.size() - cl;
                if (cl < min_leaf) continue;
                if (cr < min_leaf) break;
                const double sr = total - sl;
                const double gain = sl * sl / static_cast<double>(cl) + sr * sr / static_cast<double>(cr) - parent;
                if (gain > best.gain) best = {gain, static_cast<int>(f), static_cast<int>(b)};
            }
        }
        return best;
    }

    const BinnedInputs& data_;
    const TrainConfig& cfg_;
    std::vector<double> sums_;
    std::vector<std::size_t> counts_;
    std::vector<std::pair<std::int32_t, int>> split_bins_;
    std::vector<int> node_bin_;
};

double mean_square(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s / static_cast<double>(r.size());
}

BoostedModel fit_binned(const BinnedInputs& data, const std::vector<double>& y, const TrainConfig& cfg,
                        std::uint64_t stream) {
    const std::size_t n = y.size();
    BoostedModel model;
    model.learning_rate = cfg.learning_rate;
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (*lo == *hi) {
        model.base_score = *lo;
    } else {
        double s = 0.0;
        for (double v : y) s += v;
        model.base_score = s / static_cast<double>(n);
    }

    std::vector<double> pred(n, model.base_score), resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - pred[i];
    model.train_mse.push_back(mean_square(resid));

    Rng rng(derive_seed(cfg.seed, stream));
    TreeBuilder builder(data, cfg);
    std::vector<double> leaf_sum;
    std::vector<std::size_t> leaf_count;
    std::vector<std::int32_t> leaf_of(n);
    model.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
    for (int t = 0; t < cfg.n_trees; ++t) {
        std::vector<std::uint32_t> sample;
        sample.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            if (cfg.row_subsample >= 1.0 || rng.uniform() < cfg.row_subsample)
                sample.push_back(static_cast<std::uint32_t>(i));

        RegressionTree tree = builder.grow(resid, std::move(sample));
        builder.index_bins(tree);

        // Leaf values are refit on every training row reaching the leaf, which
        // makes each round a least-squares step on the full training set.
        leaf_sum.assign(tree.size(), 0.0);
        leaf_count.assign(tree.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto leaf = builder.route(tree, static_cast<std::uint32_t>(i));
            leaf_of[i] = leaf;
            leaf_sum[leaf] += resid[i];
            ++leaf_count[leaf];
        }
        for (std::size_t node = 0; node < tree.size(); ++node)
            if (tree.feature[node] < 0 && leaf_count[node] > 0)
                tree.value[node] = leaf_sum[node] / static_cast<double>(leaf_count[node]);

        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += cfg.learning_rate * tree.value[leaf_of[i]];
            resid[i] = y[i] - pred[i];
        }
        model.train_mse.push_back(mean_square(resid));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace

BoostedModel fit_boosted(const std::vector<InputPoint>& inputs, const std::vector<double>& targets,
                         const TrainConfig& config, std::uint64_t stream) {
    config.validate();
    if (inputs.size() != targets.size() || inputs.empty())
        throw Error(ErrorKind::invalid_argument, "inputs and targets must be non-empty and aligned");
    BinnedInputs data(inputs, config.histogram_bins);
    return fit_binned(data, targets, config, stream);
}

// ---------------------------------------------------------------------------
// kNN regression

KnnRegressor::KnnRegressor(DatasetPtr dataset, std::vector<std::size_t> rows, int k)
    : index_(std::make_shared<InputIndex>(std::move(dataset), std::move(rows))), k_(k) {
    if (k < 1) throw Error(ErrorKind::validation, "knn k must be positive", "knn_k");
}

OutputVector KnnRegressor::predict(const InputPoint& x) const {
    const auto hits = index_->query_rows(x, static_cast<std::size_t>(k_));
    const auto& ds = index_->dataset();
    if (hits.front().second == 0.0) return ds[hits.front().first].output;
    OutputVector y{};
    double wsum = 0.0;
    const auto& first = ds[hits.front().first].output;
    std::array<bool, kOutputDims> same;
    same.fill(true);
    for (const auto& [row, d2] : hits) {
        const double w = 1.0 / (std::sqrt(d2) + 1e-12);
        wsum += w;
        const auto& out = ds[row].output;
        for (std::size_t j = 0; j < kOutputDims; ++j) {
            y[j] += w * out[j];
            same[j] = same[j] && out[j] == first[j];
        }
    }
    // Equal neighbor values (e.g. constant outputs) come back exactly.
    for (std::size_t j = 0; j < kOutputDims; ++j) y[j] = same[j] ? first[j] : y[j] / wsum;
    return y;
}

double KnnRegressor::predict_single(const InputPoint& x, std::size_t j) const {
    const auto hits = index_->query_rows(x, static_cast<std::size_t>(k_));
    const auto& ds = index_->dataset();
    if (hits.front().second == 0.0) return ds[hits.front().first].output[j];
    double y = 0.0, wsum = 0.0;
    const double first = ds[hits.front().first].output[j];
    bool same = true;
    for (const auto& [row, d2] : hits) {
        const double w = 1.0 / (std::sqrt(d2) + 1e-12);
        wsum += w;
        y += w * ds[row].output[j];
        same = same && ds[row].output[j] == first;
    }
    return same ? first : y / wsum;
}

// ---------------------------------------------------------------------------
// Ensemble

SurrogateEnsemble::SurrogateEnsemble(TrainConfig config, std::vector<BoostedModel> models, KnnRegressor knn,
                                     InputPoint input_min, InputPoint input_max, std::string dataset_fingerprint,
                                     std::vector<std::size_t> training_rows, std::vector<std::size_t> holdout_rows)
    : config_(std::move(config)),
      models_(std::move(models)),
      knn_(std::move(knn)),
      input_min_(input_min),
      input_max_(input_max),
      dataset_fingerprint_(std::move(dataset_fingerprint)),
      training_rows_(std::move(training_rows)),
      holdout_rows_(std::move(holdout_rows)) {
    if (models_.size() != kOutputDims) throw Error(ErrorKind::state, "ensemble needs 64 boosted models");
}

void SurrogateEnsemble::set_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorKind::validation, "gamma must be in [0,1]", "gamma");
    config_.blend_gamma = gamma;
}

double SurrogateEnsemble::predict_single(const InputPoint& x, std::size_t j) const {
    if (j >= kOutputDims) throw Error(ErrorKind::validation, "output index out of range", "output_index");
    const double g = config_.blend_gamma;
    if (g == 1.0) return models_[j].predict(x);
    if (g == 0.0) return knn_.predict_single(x, j);
    const double b = models_[j].predict(x), k = knn_.predict_single(x, j);
    return b == k ? b : g * b + (1.0 - g) * k;
}

OutputVector SurrogateEnsemble::predict(const InputPoint& x) const {
    const double g = config_.blend_gamma;
    OutputVector y;
    if (g == 0.0) return knn_.predict(x);
    for (std::size_t j = 0; j < kOutputDims; ++j) y[j] = models_[j].predict(x);
    if (g == 1.0) return y;
    const OutputVector k = knn_.predict(x);
    for (std::size_t j = 0; j < kOutputDims; ++j) y[j] = y[j] == k[j] ? y[j] : g * y[j] + (1.0 - g) * k[j];
    return y;
}

InputPoint SurrogateEnsemble::input_range() const {
    InputPoint r;
    for (std::size_t i = 0; i < kInputDims; ++i) {
        r[i] = input_max_[i] - input_min_[i];
        if (!(r[i] > 0.0)) r[i] = 1.0;
    }
    return r;
}

HoldoutSplit split_holdout(std::size_t n, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x401d0ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    auto n_hold = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    n_hold = std::clamp<std::size_t>(n_hold, 1, n - 1);
    HoldoutSplit s;
    s.training.assign(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_hold));
    s.holdout.assign(perm.end() - static_cast<std::ptrdiff_t>(n_hold), perm.end());
    std::sort(s.training.begin(), s.training.end());
    std::sort(s.holdout.begin(), s.holdout.end());
    return s;
}

SurrogateEnsemble train(DatasetPtr dataset, const TrainConfig& config) {
    config.validate();
    const std::size_t n = dataset->size();
    if (n < 2 * static_cast<std::size_t>(config.knn_k) || n < 2)
        throw Error(ErrorKind::state, "too few records to train: need at least 2*k = " +
                                          std::to_string(2 * config.knn_k));
    auto split = split_holdout(n, config.holdout_fraction, config.seed);

    std::vector<InputPoint> x;
    x.reserve(split.training.size());
    InputPoint lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t r : split.training) {
        x.push_back((*dataset)[r].input.ratios());
        for (std::size_t i = 0; i < kInputDims; ++i) {
            lo[i] = std::min(lo[i], x.back()[i]);
            hi[i] = std::max(hi[i], x.back()[i]);
        }
    }
    const BinnedInputs data(x, config.histogram_bins);

    std::vector<BoostedModel> models(kOutputDims);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        std::vector<double> y(split.training.size());
        for (std::size_t j = next++; j < kOutputDims; j = next++) {
            for (std::size_t i = 0; i < split.training.size(); ++i) y[i] = (*dataset)[split.training[i]].output[j];
            models[j] = fit_binned(data, y, config, j);
        }
    };
    std::size_t threads = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, kOutputDims);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    KnnRegressor knn(dataset, split.training, config.knn_k);
    return SurrogateEnsemble(config, std::move(models), std::move(knn), lo, hi, dataset->fingerprint(),
                             std::move(split.training), std::move(split.holdout));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kModelMagic[8] = {'M', 'M', 'S', 'U', 'R', 'R', '0', '1'};

class Writer {
public:
    template <typename T>
    void put(const T& v) {
        buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <typename T>
    void put_vec(const std::vector<T>& v) {
        put<std::uint64_t>(v.size());
        buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
    }
    void put_str(const std::string& s) {
        put<std::uint64_t>(s.size());
        buf_ += s;
    }
    std::string& bytes() { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(const std::string& b) : buf_(b) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    template <typename T>
    std::vector<T> get_vec() {
        const auto n = get<std::uint64_t>();
        need(n * sizeof(T));
        std::vector<T> v(n);
        std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }
    std::string get_str() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw Error(ErrorKind::io, "truncated model file");
    }
    const std::string& buf_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string SurrogateEnsemble::serialize() const {
    Writer w;
    w.bytes().append(kModelMagic, sizeof(kModelMagic));
    w.put<std::uint32_t>(1);  // format version
    const auto& c = config_;
    w.put<std::int32_t>(c.n_trees);
    w.put<std::int32_t>(c.max_depth);
    w.put(c.learning_rate);
    w.put<std::int32_t>(c.histogram_bins);
    w.put<std::int32_t>(c.min_samples_leaf);
    w.put(c.row_subsample);
    w.put(c.holdout_fraction);
    w.put(c.seed);
    w.put<std::int32_t>(c.knn_k);
    w.put(c.blend_gamma);
    w.put(input_min_);
    w.put(input_max_);
    w.put_str(dataset_fingerprint_);
    std::vector<std::uint64_t> tr(training_rows_.begin(), training_rows_.end());
    std::vector<std::uint64_t> ho(holdout_rows_.begin(), holdout_rows_.end());
    w.put_vec(tr);
    w.put_vec(ho);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(models_.size()));
    for (const auto& m : models_) {
        w.put(m.base_score);
        w.put(m.learning_rate);
        w.put_vec(m.train_mse);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(m.trees.size()));
        for (const auto& t : m.trees) {
            w.put_vec(t.feature);
            w.put_vec(t.threshold);
            w.put_vec(t.left);
            w.put_vec(t.right);
            w.put_vec(t.value);
        }
    }
    return std::move(w.bytes());
}

SurrogateEnsemble SurrogateEnsemble::deserialize(const std::string& bytes, DatasetPtr dataset) {
    if (bytes.size() < sizeof(kModelMagic) || bytes.compare(0, sizeof(kModelMagic), kModelMagic, sizeof(kModelMagic)) != 0)
        throw Error(ErrorKind::io, "not a surrogate model file");
    const std::string body = bytes.substr(sizeof(kModelMagic));
    Reader r(body);
    if (const auto version = r.get<std::uint32_t>(); version != 1)
        throw Error(ErrorKind::io, "unsupported model format version " + std::to_string(version));
    TrainConfig c;
    c.n_trees = r.get<std::int32_t>();
    c.max_depth = r.get<std::int32_t>();
    c.learning_rate = r.get<double>();
    c.histogram_bins = r.get<std::int32_t>();
    c.min_samples_leaf = r.get<std::int32_t>();
    c.row_subsample = r.get<double>();
    c.holdout_fraction = r.get<double>();
    c.seed = r.get<std::uint64_t>();
    c.knn_k = r.get<std::int32_t>();
    c.blend_gamma = r.get<double>();
    const auto lo = r.get<InputPoint>();
    const auto hi = r.get<InputPoint>();
    auto fingerprint = r.get_str();
    if (fingerprint != dataset->fingerprint())
        throw Error(ErrorKind::validation, "model was trained on a different dataset (fingerprint " + fingerprint +
                                               ", loaded " + dataset->fingerprint() + ")");
    const auto tr = r.get_vec<std::uint64_t>();
    const auto ho = r.get_vec<std::uint64_t>();
    std::vector<std::size_t> training(tr.begin(), tr.end()), holdout(ho.begin(), ho.end());
    const auto n_models = r.get<std::uint32_t>();
    std::vector<BoostedModel> models(n_models);
    for (auto& m : models) {
        m.base_score = r.get<double>();
        m.learning_rate = r.get<double>();
        m.train_mse = r.get_vec<double>();
        const auto n_trees = r.get<std::uint32_t>();
        m.trees.resize(n_trees);
        for (auto& t : m.trees) {
            t.feature = r.get_vec<std::int8_t>();
            t.threshold = r.get_vec<double>();
            t.left = r.get_vec<std::int32_t>();
            t.right = r.get_vec<std::int32_t>();
            t.value = r.get_vec<double>();
        }
    }
    KnnRegressor knn(dataset, training, c.knn_k);
    return SurrogateEnsemble(c, std::move(models), std::move(knn), lo, hi, std::move(fingerprint),
                             std::move(training), std::move(holdout));
}

void SurrogateEnsemble::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write model " + path.string());
    const auto bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SurrogateEnsemble SurrogateEnsemble::load(const std::filesystem::path& path, DatasetPtr dataset) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open model " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str(), std::move(dataset));
}

std::string SurrogateEnsemble::fingerprint() const {
    Fingerprint fp;
    const auto bytes = serialize();
    fp.add_bytes(bytes.data(), bytes.size());
    return fp.hex();
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<DimensionScore> evaluate(const MixtureModel& model, const Dataset& holdout) {
    if (holdout.empty()) throw Error(ErrorKind::state, "holdout set is empty");
    const double n = static_cast<double>(holdout.size());
    std::vector<OutputVector> pred;
    pred.reserve(holdout.size());
    OutputVector mean{};
    for (const auto& rec : holdout.records()) {
        pred.push_back(model.predict(rec.input.ratios()));
        for (std::size_t j = 0; j < kOutputDims; ++j) mean[j] += rec.output[j];
    }
    for (double& m : mean) m /= n;
    std::vector<DimensionScore> scores(kOutputDims);
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        double ss_res = 0.0, ss_tot = 0.0;
        double lo = holdout[0].output[j], hi = lo;
        for (std::size_t i = 0; i < holdout.size(); ++i) {
            const double y = holdout[i].output[j];
            lo = std::min(lo, y);
            hi = std::max(hi, y);
            ss_res += (y - pred[i][j]) * (y - pred[i][j]);
            ss_tot += (y - mean[j]) * (y - mean[j]);
        }
        auto& s = scores[j];
        s.rmse = std::sqrt(ss_res / n);
        s.constant = lo == hi;
        s.r2 = s.constant ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    }
    return scores;
}

}  // namespace mixmap

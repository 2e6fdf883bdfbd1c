#include "mixmap/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mixmap/fingerprint.hpp"
#include "mixmap/rng.hpp"

namespace mixmap {

using json = nlohmann::json;

void TsneConfig::validate() const {
    auto fail = [](const char* field, const std::string& msg) { throw Error(ErrorKind::validation, msg, field); };
    if (!(perplexity >= 2.0)) fail("perplexity", "perplexity must be >= 2");
    if (n_iter < 1) fail("n_iter", "n_iter must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate", "learning_rate must be positive");
    if (!(early_exaggeration >= 1.0)) fail("early_exaggeration", "early_exaggeration must be >= 1");
    if (!(theta >= 0.0 && theta <= 1.0)) fail("theta", "theta must be in [0, 1]");
    if (subsample_cap < 1) fail("subsample_cap", "subsample_cap must be positive");
    if (kl_every < 1) fail("kl_every", "kl_every must be positive");
}

void TsneConfig::validate_for(std::size_t n_points) const {
    validate();
    if (!(3.0 * perplexity < static_cast<double>(n_points) - 1.0))
        throw Error(ErrorKind::validation,
                    "perplexity " + std::to_string(perplexity) + " too large for " + std::to_string(n_points) +
                        " points (need 3*perplexity < n - 1)",
                    "perplexity");
}

// ---------------------------------------------------------------------------
// Affinities

double AffinitySet::total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

double AffinitySet::conditional_entropy_bits(std::size_t i) const {
    double h = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        const double v = cond_p[i * k + t];
        if (v > 0.0) h -= v * std::log2(v);
    }
    return h;
}

double AffinitySet::joint(std::size_t i, std::size_t j) const {
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
        if (col[e] == j) return p[e];
    return 0.0;
}

namespace {

// Conditional distribution for one point given squared distances to its
// neighbors; returns the entropy in bits.
double conditional_row(const double* d2, std::size_t k, double beta, double* out) {
    double sum = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        out[t] = std::exp(-beta * d2[t]);
        sum += out[t];
    }
    if (!(sum > 0.0)) {
        // All mass underflowed; fall back to the nearest neighbors only.
        for (std::size_t t = 0; t < k; ++t) out[t] = d2[t] == 0.0 ? 1.0 : 0.0;
        sum = std::accumulate(out, out + k, 0.0);
    }
    double h = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        out[t] /= sum;
        if (out[t] > 0.0) h -= out[t] * std::log2(out[t]);
    }
    return h;
}

}  // namespace

AffinitySet compute_affinities(const PointMatrix& points, double perplexity, int threads) {
    const std::size_t n = points.n;
    if (!(perplexity >= 2.0) || !(3.0 * perplexity < static_cast<double>(n) - 1.0))
        throw Error(ErrorKind::validation, "too few points for perplexity " + std::to_string(perplexity),
                    "perplexity");
    const std::size_t k = std::min(n - 1, static_cast<std::size_t>(std::floor(3.0 * perplexity)));
    const double target = std::log2(perplexity);

    AffinitySet a;
    a.n = n;
    a.k = k;
    a.cond_neighbors.resize(n * k);
    a.cond_p.resize(n * k);
    a.beta.resize(n);

    parallel_for(n, threads, [&](std::size_t i) {
        // Exact neighbors by brute force, ties by index.
        std::vector<std::pair<double, std::uint32_t>> cand;
        cand.reserve(n - 1);
        const double* xi = points.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* xj = points.row(j);
            double s = 0.0;
            for (std::size_t d = 0; d < points.dim; ++d) {
                const double diff = xi[d] - xj[d];
                s += diff * diff;
            }
            cand.emplace_back(s, static_cast<std::uint32_t>(j));
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());

        std::vector<double> d2(k);
        for (std::size_t t = 0; t < k; ++t) {
            a.cond_neighbors[i * k + t] = cand[t].second;
            d2[t] = cand[t].first - cand[0].first;  // shift for stability; distribution unchanged
        }
        double mean = std::accumulate(d2.begin(), d2.end(), 0.0) / static_cast<double>(k);
        double beta = mean > 0.0 ? 1.0 / mean : 1.0;
        double lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double* row = a.cond_p.data() + i * k;
        for (int step = 0; step < 50; ++step) {
            const double h = conditional_row(d2.data(), k, beta, row);
            if (std::abs(h - target) <= 1e-5) break;
            if (h > target) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
            if (step == 49) conditional_row(d2.data(), k, beta, row);
        }
        a.beta[i] = beta;
    });

    // Symmetrize: p_ij = (p_j|i + p_i|j) / 2n.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            const auto j = a.cond_neighbors[i * k + t];
            const double v = a.cond_p[i * k + t];
            rows[i].emplace_back(j, v);
            rows[j].emplace_back(static_cast<std::uint32_t>(i), v);
        }
    a.row_ptr.assign(n + 1, 0);
    const double norm = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = rows[i];
        std::sort(r.begin(), r.end());
        for (std::size_t e = 0; e < r.size(); ++e) {
            if (e > 0 && r[e].first == r[e - 1].first) {
                a.p.back() += r[e].second / norm;
                continue;
            }
            a.col.push_back(r[e].first);
            a.p.push_back(r[e].second / norm);
        }
        a.row_ptr[i + 1] = a.col.size();
    }
    return a;
}

// ---------------------------------------------------------------------------
// Barnes-Hut quadtree

namespace {

class QuadTree {
public:
    struct Node {
        double cx, cy, half;     // cell center and half width
        double mx = 0, my = 0;   // center of mass
        std::uint32_t count = 0;
        std::int32_t child = -1;  // first of 4 consecutive children, -1 for leaf
        std::uint32_t begin = 0, end = 0;  // leaf point range in order_
    };

    explicit QuadTree(const std::vector<Point2>& y) : y_(y) {
        order_.resize(y.size());
        std::iota(order_.begin(), order_.end(), 0u);
        double minx = y[0][0], maxx = y[0][0], miny = y[0][1], maxy = y[0][1];
        for (const auto& p : y) {
            minx = std::min(minx, p[0]);
            maxx = std::max(maxx, p[0]);
            miny = std::min(miny, p[1]);
            maxy = std::max(maxy, p[1]);
        }
        const double half = 0.5 * std::max(maxx - minx, maxy - miny) * (1.0 + 1e-9) + 1e-12;
        nodes_.reserve(2 * y.size());
        nodes_.push_back({0.5 * (minx + maxx), 0.5 * (miny + maxy), half});
        build(0, 0, static_cast<std::uint32_t>(y.size()), 0);
    }

    // Repulsive force numerator sum and the Z contribution for point i.
    void repulsion(std::uint32_t i, double theta, double& fx, double& fy, double& z) const {
        const double xi = y_[i][0], yi = y_[i][1];
        std::int32_t stack[256];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node& nd = nodes_[stack[--top]];
            if (nd.count == 0) continue;
            if (nd.child < 0) {
                for (std::uint32_t t = nd.begin; t < nd.end; ++t) {
                    const auto j = order_[t];
                    if (j == i) continue;
                    const double dx = xi - y_[j][0], dy = yi - y_[j][1];
                    const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                    z += q;
                    fx += q * q * dx;
                    fy += q * q * dy;
                }
                continue;
            }
            const double dx = xi - nd.mx, dy = yi - nd.my;
            const double d2 = dx * dx + dy * dy;
            const double width = 2.0 * nd.half;
            if (width * width < theta * theta * d2) {
                const double q = 1.0 / (1.0 + d2);
                const double m = static_cast<double>(nd.count);
                z += m * q;
                fx += m * q * q * dx;
                fy += m * q * q * dy;
                continue;
            }
            for (int c = 3; c >= 0; --c) stack[top++] = nd.child + c;
        }
    }

private:
    void build(std::int32_t id, std::uint32_t begin, std::uint32_t end, int depth) {
        Node& nd = nodes_[id];
        nd.count = end - begin;
        nd.begin = begin;
        nd.end = end;
        double sx = 0, sy = 0;
        for (std::uint32_t t = begin; t < end; ++t) {
            sx += y_[order_[t]][0];
            sy += y_[order_[t]][1];
        }
        if (nd.count > 0) {
            nd.mx = sx / nd.count;
            nd.my = sy / nd.count;
        }
        if (nd.count <= 1 || depth >= 48) return;

        const double cx = nd.cx, cy = nd.cy, h = nd.half * 0.5;
        auto quadrant = [&](std::uint32_t p) {
            return (y_[p][0] >= cx ? 1 : 0) + (y_[p][1] >= cy ? 2 : 0);
        };
        // Stable partition into 4 quadrants keeps the build deterministic.
        std::uint32_t bounds[5];
        bounds[0] = begin;
        auto first = order_.begin() + begin;
        for (int q = 0; q < 4; ++q) {
            auto mid = std::stable_partition(first, order_.begin() + end,
                                             [&](std::uint32_t p) { return quadrant(p) == q; });
            bounds[q + 1] = static_cast<std::uint32_t>(mid - order_.begin());
            first = mid;
        }
        const auto child = static_cast<std::int32_t>(nodes_.size());
        nodes_[id].child = child;
        for (int q = 0; q < 4; ++q)
            nodes_.push_back({cx + ((q & 1) ? h : -h), cy + ((q & 2) ? h : -h), h});
        for (int q = 0; q < 4; ++q) build(child + q, bounds[q], bounds[q + 1], depth + 1);
    }

    const std::vector<Point2>& y_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Optimization

TsneResult tsne(const PointMatrix& points, const TsneConfig& config) {
    config.validate_for(points.n);
    const std::size_t n = points.n;
    const AffinitySet P = compute_affinities(points, config.perplexity, config.threads);
    const bool exact = config.theta == 0.0;

    TsneResult result;
    auto& y = result.coords;
    y.resize(n);
    Rng rng(config.seed);
    for (auto& p : y) {
        p[0] = 1e-4 * rng.normal();
        p[1] = 1e-4 * rng.normal();
    }
    std::vector<Point2> update(n, Point2{0, 0}), gains(n, Point2{1, 1}), grad(n);
    std::vector<Point2> attr(n), rep(n);
    std::vector<double> zpart(n);

    auto compute_repulsion = [&] {
        if (exact) {
            parallel_for(n, config.threads, [&](std::size_t i) {
                double fx = 0, fy = 0, z = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
                    const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                    z += q;
                    fx += q * q * dx;
                    fy += q * q * dy;
                }
                rep[i] = {fx, fy};
                zpart[i] = z;
            });
        } else {
            const QuadTree tree(y);
            parallel_for(n, config.threads, [&](std::size_t i) {
                double fx = 0, fy = 0, z = 0;
                tree.repulsion(static_cast<std::uint32_t>(i), config.theta, fx, fy, z);
                rep[i] = {fx, fy};
                zpart[i] = z;
            });
        }
        double z = 0.0;
        for (double v : zpart) z += v;
        return z;
    };

    auto kl_divergence = [&](double z) {
        double kl = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t e = P.row_ptr[i]; e < P.row_ptr[i + 1]; ++e) {
                const double pij = P.p[e];
                if (pij <= 0.0) continue;
                const std::size_t j = P.col[e];
                const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
                const double q = 1.0 / (1.0 + dx * dx + dy * dy) / z;
                kl += pij * std::log(pij / std::max(q, std::numeric_limits<double>::min()));
            }
        return kl;
    };

    for (int it = 0; it < config.n_iter; ++it) {
        const double exaggeration = it < config.exaggeration_iters ? config.early_exaggeration : 1.0;
        const double momentum = it < config.momentum_switch ? config.momentum_initial : config.momentum_final;

        const double z = compute_repulsion();
        if (it % config.kl_every == 0) result.kl_trace.push_back({it, kl_divergence(z)});

        parallel_for(n, config.threads, [&](std::size_t i) {
            double fx = 0, fy = 0;
            for (std::size_t e = P.row_ptr[i]; e < P.row_ptr[i + 1]; ++e) {
                const std::size_t j = P.col[e];
                const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
                const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                fx += P.p[e] * q * dx;
                fy += P.p[e] * q * dy;
            }
            attr[i] = {exaggeration * fx, exaggeration * fy};
        });

        for (std::size_t i = 0; i < n; ++i)
            for (int d = 0; d < 2; ++d) {
                const double g = 4.0 * (attr[i][d] - rep[i][d] / z);
                grad[i][d] = g;
                double& gain = gains[i][d];
                gain = (g > 0.0) != (update[i][d] > 0.0) ? gain + 0.2 : gain * 0.8;
                gain = std::max(gain, 0.01);
                update[i][d] = momentum * update[i][d] - config.learning_rate * gain * g;
                y[i][d] += update[i][d];
            }

        double mx = 0, my = 0;
        for (const auto& p : y) {
            mx += p[0];
            my += p[1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (auto& p : y) {
            p[0] -= mx;
            p[1] -= my;
        }
    }
    result.kl_trace.push_back({config.n_iter, kl_divergence(compute_repulsion())});
    return result;
}

// ---------------------------------------------------------------------------
// EmbeddingMap

const char* to_string(EmbeddingSpace space) { return space == EmbeddingSpace::output ? "output" : "input"; }

EmbeddingSpace parse_space(const std::string& s) {
    if (s == "output") return EmbeddingSpace::output;
    if (s == "input") return EmbeddingSpace::input;
    throw Error(ErrorKind::validation, "space must be 'output' or 'input'", "space");
}

EmbeddingMap::EmbeddingMap(EmbeddingSpace space, std::vector<RecordId> ids, std::vector<Point2> coords)
    : space_(space) {
    if (ids.size() != coords.size()) throw Error(ErrorKind::validation, "ids and coordinates differ in length");
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    for (std::size_t i : order) {
        if (!ids_.empty() && ids_.back() == ids[i])
            throw Error(ErrorKind::validation, "duplicate embedding id " + std::to_string(ids[i]));
        if (!std::isfinite(coords[i][0]) || !std::isfinite(coords[i][1]))
            throw Error(ErrorKind::validation, "non-finite embedding coordinate for id " + std::to_string(ids[i]));
        ids_.push_back(ids[i]);
        coords_.push_back(coords[i]);
    }
}

std::optional<Point2> EmbeddingMap::find(RecordId id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return coords_[static_cast<std::size_t>(it - ids_.begin())];
}

std::vector<std::size_t> EmbeddingMap::rows_in(const Dataset& dataset) const {
    std::vector<std::size_t> rows;
    rows.reserve(ids_.size());
    for (RecordId id : ids_) rows.push_back(dataset.require_row(id));
    return rows;
}

std::string EmbeddingMap::fingerprint() const {
    Fingerprint fp;
    fp.add(std::string_view(to_string(space_)));
    fp.add(std::span<const RecordId>(ids_));
    fp.add(std::span<const Point2>(coords_));
    return fp.hex();
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

json config_to_json(const TsneConfig& c) {
    return json{{"perplexity", c.perplexity},     {"n_iter", c.n_iter},
                {"early_exaggeration", c.early_exaggeration}, {"exaggeration_iters", c.exaggeration_iters},
                {"learning_rate", c.learning_rate}, {"theta", c.theta},
                {"seed", c.seed},                 {"subsample_cap", c.subsample_cap}};
}

TsneConfig config_from_json(const json& j) {
    TsneConfig c;
    c.perplexity = j.value("perplexity", c.perplexity);
    c.n_iter = j.value("n_iter", c.n_iter);
    c.early_exaggeration = j.value("early_exaggeration", c.early_exaggeration);
    c.exaggeration_iters = j.value("exaggeration_iters", c.exaggeration_iters);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.theta = j.value("theta", c.theta);
    c.seed = j.value("seed", c.seed);
    c.subsample_cap = j.value("subsample_cap", c.subsample_cap);
    return c;
}

}  // namespace

void EmbeddingMap::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write embedding " + path.string());
    json header{{"format", "mixmap-embedding"},
                {"version", 1},
                {"space", to_string(space_)},
                {"dataset_fingerprint", dataset_fingerprint},
                {"config", config_to_json(config)}};
    json trace = json::array();
    for (const auto& s : kl_trace) trace.push_back({s.iteration, s.kl});
    header["kl_trace"] = trace;
    out << "# " << header.dump() << "\n";
    out << "id,x,y\n";
    for (std::size_t i = 0; i < ids_.size(); ++i)
        out << ids_[i] << ',' << fmt(coords_[i][0]) << ',' << fmt(coords_[i][1]) << '\n';
}

EmbeddingMap EmbeddingMap::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open embedding " + path.string());
    json header = json::object();
    std::vector<RecordId> ids;
    std::vector<Point2> coords;
    std::string line;
    std::size_t line_no = 0;
    auto bad = [&](const std::string& what) {
        throw Error(ErrorKind::parse, path.string() + " line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = line.substr(1);
            if (body.find('{') != std::string::npos) {
                try {
                    header = json::parse(body);
                } catch (const json::exception&) {
                    bad("malformed header");
                }
            }
            continue;
        }
        if (line.rfind("id", 0) == 0) continue;
        RecordId id = 0;
        double x = 0, yv = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        auto r1 = std::from_chars(p, end, id);
        if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ',') bad("expected id,x,y");
        auto r2 = std::from_chars(r1.ptr + 1, end, x);
        if (r2.ec != std::errc() || r2.ptr == end || *r2.ptr != ',') bad("expected id,x,y");
        auto r3 = std::from_chars(r2.ptr + 1, end, yv);
        if (r3.ec != std::errc() || r3.ptr != end) bad("expected id,x,y");
        ids.push_back(id);
        coords.push_back({x, yv});
    }
    EmbeddingMap map(parse_space(header.value("space", std::string("output"))), std::move(ids), std::move(coords));
    map.dataset_fingerprint = header.value("dataset_fingerprint", std::string());
    if (header.contains("config")) map.config = config_from_json(header["config"]);
    if (header.contains("kl_trace"))
        for (const auto& s : header["kl_trace"]) map.kl_trace.push_back({s.at(0).get<int>(), s.at(1).get<double>()});
    return map;
}

// ---------------------------------------------------------------------------
// Dataset helpers

std::vector<RecordId> subsample(const Dataset& dataset, std::size_t cap, std::uint64_t seed) {
    if (cap < 1) throw Error(ErrorKind::validation, "cap must be positive", "cap");
    const std::size_t n = dataset.size();
    std::vector<RecordId> ids;
    ids.reserve(std::min(n, cap));
    if (n <= cap) {
        for (const auto& r : dataset.records()) ids.push_back(r.id);
        return ids;
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5ab5ULL));
    for (std::size_t i = 0; i < cap; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
    rows.resize(cap);
    std::sort(rows.begin(), rows.end());
    for (std::size_t r : rows) ids.push_back(dataset[r].id);
    return ids;
}

PointMatrix embedding_points(const Dataset& dataset, EmbeddingSpace space, std::span<const RecordId> ids) {
    PointMatrix m;
    m.n = ids.size();
    if (space == EmbeddingSpace::input) {
        m.dim = kInputDims;
        m.values.reserve(m.n * m.dim);
        for (RecordId id : ids)
            for (double v : dataset.record(id).input.ratios()) m.values.push_back(v);
    } else {
        const auto& st = dataset.stats();
        m.dim = kOutputDims;
        m.values.reserve(m.n * m.dim);
        for (RecordId id : ids) {
            const auto& y = dataset.record(id).output;
            for (std::size_t j = 0; j < kOutputDims; ++j)
                m.values.push_back(st.output_constant[j] ? 0.0 : (y[j] - st.output_mean[j]) / st.output_std[j]);
        }
    }
    return m;
}

EmbeddingMap embed_dataset(const Dataset& dataset, EmbeddingSpace space, const TsneConfig& config) {
    auto ids = subsample(dataset, config.subsample_cap, config.seed);
    const auto points = embedding_points(dataset, space, ids);
    auto result = tsne(points, config);
    EmbeddingMap map(space, std::move(ids), std::move(result.coords));
    map.kl_trace = std::move(result.kl_trace);
    map.config = config;
    map.dataset_fingerprint = dataset.fingerprint();
    return map;
}

Point2 embed_coordinates(const EmbeddingMap& map, RecordId id) {
    if (auto p = map.find(id)) return *p;
    throw Error(ErrorKind::not_found,
                "record " + std::to_string(id) +
                    " is not part of the embedding (subsampled out); snap within the embedded subset",
                "record_id");
}

}  // namespace mixmap

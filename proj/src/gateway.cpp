#include "mixmap/gateway.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>

#include "mixmap/serialize.hpp"

namespace mixmap {

using json = nlohmann::json;

namespace {

// Reads keys out of a JSON object and remembers which ones were used, so
// leftovers can be reported.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_object()) throw Error(ErrorKind::validation, "expected a JSON object", prefix_);
    }

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::validation, "wrong type for config key", prefix_ + key);
        }
    }

    void read_path(const char* key, std::filesystem::path& out) {
        std::string s = out.string();
        read(key, s);
        out = s;
    }

    const json* child(const char* key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw Error(ErrorKind::validation, "unknown config key", prefix_ + k);
    }

private:
    const json& j_;
    std::string prefix_;
    std::set<std::string> used_;
};

void read_train(const json& j, TrainConfig& c) {
    ObjectReader r(j, "train.");
    r.read("n_trees", c.n_trees);
    r.read("max_depth", c.max_depth);
    r.read("learning_rate", c.learning_rate);
    r.read("histogram_bins", c.histogram_bins);
    r.read("min_samples_leaf", c.min_samples_leaf);
    r.read("row_subsample", c.row_subsample);
    r.read("holdout_fraction", c.holdout_fraction);
    r.read("seed", c.seed);
    r.read("knn_k", c.knn_k);
    r.read("blend_gamma", c.blend_gamma);
    r.read("threads", c.threads);
    r.finish();
}

void read_tsne(const json& j, TsneConfig& c) {
    ObjectReader r(j, "tsne.");
    r.read("perplexity", c.perplexity);
    r.read("n_iter", c.n_iter);
    r.read("early_exaggeration", c.early_exaggeration);
    r.read("exaggeration_iters", c.exaggeration_iters);
    r.read("learning_rate", c.learning_rate);
    r.read("momentum_initial", c.momentum_initial);
    r.read("momentum_final", c.momentum_final);
    r.read("momentum_switch", c.momentum_switch);
    r.read("theta", c.theta);
    r.read("seed", c.seed);
    r.read("subsample_cap", c.subsample_cap);
    r.read("kl_every", c.kl_every);
    r.read("threads", c.threads);
    r.finish();
}

void read_engine(const json& j, EngineConfig& c) {
    ObjectReader r(j, "engine.");
    r.read("beta", c.beta);
    r.read("default_k", c.default_k);
    r.read("default_steps", c.default_steps);
    if (const json* s = r.child("sensitivity")) {
        ObjectReader sr(*s, "engine.sensitivity.");
        sr.read("n_samples", c.sensitivity.n_samples);
        sr.read("sigma", c.sensitivity.sigma);
        sr.read("fd_step", c.sensitivity.fd_step);
        sr.read("seed", c.sensitivity.seed);
        sr.finish();
    }
    r.finish();
}

// --- request body helpers -------------------------------------------------

json parse_body(const std::string& body) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, std::string("malformed JSON body: ") + e.what(), "body");
    }
    if (!j.is_object()) throw Error(ErrorKind::validation, "request body must be a JSON object", "body");
    return j;
}

std::optional<std::uint64_t> opt_uint(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) return std::nullopt;
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    if (it->is_number_integer() && it->get<std::int64_t>() >= 0) return it->get<std::uint64_t>();
    throw Error(ErrorKind::validation, std::string(key) + " must be a non-negative integer", key);
}

std::uint64_t req_uint(const json& body, const char* key) {
    auto v = opt_uint(body, key);
    if (!v) throw Error(ErrorKind::validation, std::string("missing required field ") + key, key);
    return *v;
}

std::optional<double> opt_real(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw Error(ErrorKind::validation, std::string(key) + " must be a number", key);
    return it->get<double>();
}

double req_real(const json& body, const char* key) {
    auto v = opt_real(body, key);
    if (!v) throw Error(ErrorKind::validation, std::string("missing required field ") + key, key);
    return *v;
}

std::optional<std::size_t> opt_size(const json& body, const char* key) {
    auto v = opt_uint(body, key);
    if (!v) return std::nullopt;
    return static_cast<std::size_t>(*v);
}

std::uint64_t parse_uint_text(const std::string& s, const char* field) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw Error(ErrorKind::validation, std::string(field) + " must be a non-negative integer", field);
    return v;
}

std::optional<std::string> query_param(const ApiRequest& r, const char* key) {
    auto it = r.query.find(key);
    if (it == r.query.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        std::size_t j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        if (j > i) parts.push_back(path.substr(i, j - i));
        i = j + 1;
    }
    return parts;
}

json record_json(const SampleRecord& r) {
    return json{{"id", r.id}, {"input", to_json(r.input)}, {"output", to_json(r.output)}};
}

}  // namespace

// --- config ------------------------------------------------------------------

ServerConfig ServerConfig::from_json(const json& j) {
    ServerConfig c;
    ObjectReader r(j, "");
    r.read_path("data", c.data);
    r.read_path("schema", c.schema);
    r.read_path("model", c.model);
    r.read_path("embedding", c.embedding);
    r.read_path("input_embedding", c.input_embedding);
    r.read_path("session_log_dir", c.session_log_dir);
    r.read("train_on_start", c.train_on_start);
    r.read("embed_on_start", c.embed_on_start);
    r.read("host", c.host);
    r.read("port", c.port);
    r.read("seed", c.seed);
    r.read("page_size", c.page_size);
    if (const json* e = r.child("engine")) read_engine(*e, c.engine);
    if (const json* t = r.child("train")) read_train(*t, c.train);
    if (const json* t = r.child("tsne")) read_tsne(*t, c.tsne);
    r.finish();
    return c;
}

ServerConfig ServerConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, "config " + path.string() + ": " + e.what());
    }
}

json ServerConfig::to_json() const {
    const auto& t = train;
    const auto& s = tsne;
    return json{
        {"data", data.string()},
        {"schema", schema.string()},
        {"model", model.string()},
        {"embedding", embedding.string()},
        {"input_embedding", input_embedding.string()},
        {"session_log_dir", session_log_dir.string()},
        {"train_on_start", train_on_start},
        {"embed_on_start", embed_on_start},
        {"host", host},
        {"port", port},
        {"seed", seed},
        {"page_size", page_size},
        {"engine",
         {{"beta", engine.beta},
          {"default_k", engine.default_k},
          {"default_steps", engine.default_steps},
          {"sensitivity",
           {{"n_samples", engine.sensitivity.n_samples},
            {"sigma", engine.sensitivity.sigma},
            {"fd_step", engine.sensitivity.fd_step},
            {"seed", engine.sensitivity.seed}}}}},
        {"train",
         {{"n_trees", t.n_trees}, {"max_depth", t.max_depth}, {"learning_rate", t.learning_rate},
          {"histogram_bins", t.histogram_bins}, {"min_samples_leaf", t.min_samples_leaf},
          {"row_subsample", t.row_subsample}, {"holdout_fraction", t.holdout_fraction}, {"seed", t.seed},
          {"knn_k", t.knn_k}, {"blend_gamma", t.blend_gamma}, {"threads", t.threads}}},
        {"tsne",
         {{"perplexity", s.perplexity}, {"n_iter", s.n_iter}, {"early_exaggeration", s.early_exaggeration},
          {"exaggeration_iters", s.exaggeration_iters}, {"learning_rate", s.learning_rate},
          {"momentum_initial", s.momentum_initial}, {"momentum_final", s.momentum_final},
          {"momentum_switch", s.momentum_switch}, {"theta", s.theta}, {"seed", s.seed},
          {"subsample_cap", s.subsample_cap}, {"kl_every", s.kl_every}, {"threads", s.threads}}},
    };
}

void ServerConfig::validate() const {
    namespace fs = std::filesystem;
    if (data.empty()) throw Error(ErrorKind::validation, "dataset path is required", "data");
    if (!fs::exists(data)) throw Error(ErrorKind::io, "dataset not found: " + data.string(), "data");
    if (!schema.empty() && !fs::exists(schema))
        throw Error(ErrorKind::io, "schema not found: " + schema.string(), "schema");
    if (!train_on_start && (model.empty() || !fs::exists(model)))
        throw Error(ErrorKind::io, "model file missing and train_on_start not set", "model");
    if (!embed_on_start && (embedding.empty() || !fs::exists(embedding)))
        throw Error(ErrorKind::io, "embedding file missing and embed_on_start not set", "embedding");
    if (!input_embedding.empty() && !fs::exists(input_embedding))
        throw Error(ErrorKind::io, "input embedding not found: " + input_embedding.string(), "input_embedding");
    if (port < 0 || port > 65535) throw Error(ErrorKind::validation, "port out of range", "port");
    if (page_size < 1) throw Error(ErrorKind::validation, "page_size must be positive", "page_size");
    train.validate();
    tsne.validate();
    engine.sensitivity.validate();
}

json Fingerprints::to_json() const {
    return json{{"dataset", dataset},
                {"model", model},
                {"embedding", embedding},
                {"input_embedding", input_embedding.empty() ? json(nullptr) : json(input_embedding)}};
}

Fingerprints engine_fingerprints(const Engine& engine) {
    Fingerprints f;
    f.dataset = engine.dataset().fingerprint();
    f.model = engine.model().fingerprint();
    f.embedding = engine.output_map().fingerprint();
    if (engine.input_map()) f.input_embedding = engine.input_map()->fingerprint();
    return f;
}

std::shared_ptr<const Engine> build_engine(const ServerConfig& config, std::ostream* log) {
    config.validate();
    auto say = [&](const std::string& s) {
        if (log) *log << s << std::endl;
    };
    const auto schema = config.schema.empty() ? ColumnSchema::generic() : ColumnSchema::load(config.schema);
    LoadReport report;
    auto ds = std::make_shared<Dataset>(load_dataset(config.data, schema, true, &report));
    ds->set_stats(compute_stats(*ds));
    say("dataset: " + std::to_string(report.rows) + " records" + (report.from_cache ? " (cache)" : ""));
    DatasetPtr dataset = ds;

    std::shared_ptr<const SurrogateEnsemble> model;
    if (!config.model.empty() && std::filesystem::exists(config.model)) {
        model = std::make_shared<SurrogateEnsemble>(SurrogateEnsemble::load(config.model, dataset));
    } else {
        say("training surrogate");
        auto m = std::make_shared<SurrogateEnsemble>(train(dataset, config.train));
        if (!config.model.empty()) m->save(config.model);
        model = m;
    }

    std::shared_ptr<const EmbeddingMap> output_map;
    if (!config.embedding.empty() && std::filesystem::exists(config.embedding)) {
        output_map = std::make_shared<EmbeddingMap>(EmbeddingMap::load(config.embedding));
    } else {
        say("computing output embedding");
        auto m = std::make_shared<EmbeddingMap>(embed_dataset(*dataset, EmbeddingSpace::output, config.tsne));
        if (!config.embedding.empty()) m->save(config.embedding);
        output_map = m;
    }

    std::shared_ptr<const EmbeddingMap> input_map;
    if (!config.input_embedding.empty())
        input_map = std::make_shared<EmbeddingMap>(EmbeddingMap::load(config.input_embedding));

    auto engine = std::make_shared<const Engine>(dataset, model, output_map, input_map, config.engine);
    const auto fp = engine_fingerprints(*engine);
    say("dataset fingerprint: " + fp.dataset);
    say("model fingerprint: " + fp.model);
    say("embedding fingerprint: " + fp.embedding);
    if (input_map) say("input embedding fingerprint: " + fp.input_embedding);
    return engine;
}

// --- errors & pagination -------------------------------------------------

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::schema:
        case ErrorKind::parse:
        case ErrorKind::validation:
        case ErrorKind::invalid_argument:
        case ErrorKind::state:
            return 400;
        case ErrorKind::not_found:
            return 404;
        case ErrorKind::busy:
            return 409;
        case ErrorKind::io:
            return 500;
    }
    return 500;
}

json error_json(const Error& e) {
    json j{{"code", to_string(e.kind())}, {"message", e.what()}};
    if (!e.field().empty()) j["field"] = e.field();
    return j;
}

json paginate(const json& ids, const json& values, const char* values_key, std::size_t page,
              std::size_t page_size) {
    const std::size_t total = ids.size();
    const std::size_t n_pages = total == 0 ? 1 : (total + page_size - 1) / page_size;
    if (page >= n_pages)
        throw Error(ErrorKind::validation, "page " + std::to_string(page) + " out of range (" +
                                               std::to_string(n_pages) + " pages)",
                    "page");
    const std::size_t lo = page * page_size;
    const std::size_t hi = std::min(total, lo + page_size);
    json out_ids = json::array(), out_vals = json::array();
    for (std::size_t i = lo; i < hi; ++i) {
        out_ids.push_back(ids[i]);
        out_vals.push_back(values[i]);
    }
    return json{{"ids", out_ids}, {values_key, out_vals}, {"page", page},
                {"page_size", page_size}, {"total", total}, {"n_pages", n_pages}};
}

// --- Api ---------------------------------------------------------------------

Api::Api(std::shared_ptr<const Engine> engine, std::size_t default_page_size, std::filesystem::path session_log_dir)
    : engine_(std::move(engine)),
      fingerprints_(engine_fingerprints(*engine_)),
      default_page_size_(default_page_size),
      log_dir_(std::move(session_log_dir)) {
    if (default_page_size_ < 1) throw Error(ErrorKind::validation, "page size must be positive", "page_size");
    if (!log_dir_.empty()) std::filesystem::create_directories(log_dir_);
}

ApiResponse Api::handle(const ApiRequest& request) {
    json echo{{"method", request.method}, {"path", request.path}, {"query", request.query}};
    ApiResponse resp;
    try {
        json body = route(request);
        resp.body = std::move(body);
    } catch (const Error& e) {
        resp.status = http_status(e.kind());
        resp.body = json{{"error", error_json(e)}};
    } catch (const json::exception& e) {
        resp.status = 400;
        resp.body = json{{"error", {{"code", "parse_error"}, {"message", e.what()}}}};
    } catch (const std::exception& e) {
        resp.status = 500;
        resp.body = json{{"error", {{"code", "internal_error"}, {"message", e.what()}}}};
    }
    try {
        echo["body"] = parse_body(request.body);
    } catch (const Error&) {
        echo["body"] = request.body;
    }
    resp.body["request"] = std::move(echo);
    resp.body["fingerprints"] = fingerprints_.to_json();
    return resp;
}

std::size_t Api::page_size(const ApiRequest& r) const {
    auto s = query_param(r, "page_size");
    if (!s) return default_page_size_;
    const auto v = parse_uint_text(*s, "page_size");
    if (v < 1) throw Error(ErrorKind::validation, "page_size must be positive", "page_size");
    return static_cast<std::size_t>(v);
}

std::shared_ptr<Api::SessionSlot> Api::slot(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorKind::not_found, "unknown session '" + id + "'", "session_id");
    return it->second;
}

json Api::hits_json(const std::vector<NeighborHit>& hits) const {
    json out = json::array();
    for (const auto& h : hits) {
        json r = record_json(engine_->dataset().record(h.id));
        r["distance"] = h.distance;
        out.push_back(std::move(r));
    }
    return out;
}

json Api::create_session(const json& body) {
    const std::uint64_t seed = opt_uint(body, "seed").value_or(0);
    std::string id;
    {
        std::lock_guard lock(sessions_mutex_);
        id = "s" + std::to_string(next_session_++);
    }
    Session::Sink sink;
    if (!log_dir_.empty()) {
        const auto file = log_dir_ / (id + ".jsonl");
        std::filesystem::remove(file);
        sink = [file](const HistoryEntry& e) { append_log(file, e); };
    }
    auto slot = std::make_shared<SessionSlot>();
    slot->session = std::make_unique<Session>(Session::create(*engine_, seed, id, std::move(sink)));
    json state = slot->session->state().to_json();
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(id, std::move(slot));
    return state;
}

json Api::session_op(const std::string& id, const std::string& op, const json& body) {
    auto s = slot(id);
    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw Error(ErrorKind::busy, "session '" + id + "' is busy", "session_id");
    Session& session = *s->session;

    if (op == "state") return session.state().to_json();
    if (op == "history") {
        json entries = json::array();
        for (const auto& e : session.state().history) entries.push_back(e.to_json());
        return json{{"session_id", id}, {"history", entries}};
    }
    if (op == "input") {
        const auto dim = req_uint(body, "dim");
        if (dim >= kInputDims) throw Error(ErrorKind::validation, "dim must be in [0, 6)", "dim");
        session.adjust_input(static_cast<std::size_t>(dim), req_real(body, "value"));
        return session.state().to_json();
    }
    if (op == "search") {
        auto k = opt_size(body, "k");
        if (k && *k < 1) throw Error(ErrorKind::validation, "k must be >= 1", "k");
        return json{{"hits", hits_json(session.search_initial(k))}};
    }
    if (op == "select") {
        session.select_record(req_uint(body, "record_id"));
        return session.state().to_json();
    }
    if (op == "target") {
        const auto j = req_uint(body, "output_index");
        if (j >= kOutputDims) throw Error(ErrorKind::validation, "output_index must be in [0, 64)", "output_index");
        session.adjust_output_target(static_cast<std::size_t>(j), req_real(body, "value"));
        return session.state().to_json();
    }
    if (op == "clear") {
        session.clear_targets();
        return session.state().to_json();
    }
    if (op == "suggest") {
        auto k = opt_size(body, "k");
        if (k && *k < 1) throw Error(ErrorKind::validation, "k must be >= 1", "k");
        auto beta = opt_real(body, "beta");
        if (beta && !(*beta >= 0.0 && std::isfinite(*beta)))
            throw Error(ErrorKind::validation, "beta must be finite and non-negative", "beta");
        return json{{"hits", hits_json(session.suggest(k, beta))}};
    }
    if (op == "interpolate") {
        auto steps = opt_size(body, "steps");
        if (steps && *steps < 2) throw Error(ErrorKind::validation, "steps must be >= 2", "steps");
        const auto to_id = req_uint(body, "to_id");
        engine_->dataset().require_row(to_id);
        return to_json(session.interpolate_to(to_id, steps));
    }
    if (op == "commit") {
        session.commit_step(static_cast<std::size_t>(req_uint(body, "step_index")));
        return session.state().to_json();
    }
    if (op == "pick") {
        session.free_pick(req_uint(body, "record_id"));
        return session.state().to_json();
    }
    throw Error(ErrorKind::not_found, "unknown session operation '" + op + "'", "path");
}

json Api::route(const ApiRequest& r) {
    const auto parts = split_path(r.path);
    const bool get = r.method == "GET";
    const bool post = r.method == "POST";
    auto no_route = [&]() -> Error {
        return Error(ErrorKind::not_found, "no route for " + r.method + " " + r.path, "path");
    };
    if (parts.size() < 2 || parts[0] != "api") throw no_route();
    const auto& head = parts[1];

    if (head == "meta" && parts.size() == 2 && get) {
        const auto& ds = engine_->dataset();
        return json{{"n_records", ds.size()},
                    {"input_names", ds.schema().input_names},
                    {"output_names", ds.schema().output_names},
                    {"stats", to_json(engine_->stats())},
                    {"embedded_records", engine_->output_map().size()},
                    {"has_input_embedding", engine_->input_map() != nullptr},
                    {"defaults",
                     {{"beta", engine_->config().beta},
                      {"k", engine_->config().default_k},
                      {"steps", engine_->config().default_steps},
                      {"page_size", default_page_size_}}}};
    }

    if (head == "session") {
        if (parts.size() == 2 && post) return create_session(parse_body(r.body));
        if (parts.size() == 3 && get) return session_op(parts[2], "state", json::object());
        if (parts.size() == 4 && get && parts[3] == "history") return session_op(parts[2], "history", json::object());
        if (parts.size() == 4 && post) return session_op(parts[2], parts[3], parse_body(r.body));
        throw no_route();
    }

    if (head == "embedding" && parts.size() == 2 && get) {
        const auto space = parse_space(query_param(r, "space").value_or("output"));
        const auto& map = engine_->map(space);
        json ids = json::array(), xy = json::array();
        for (std::size_t i = 0; i < map.size(); ++i) {
            ids.push_back(map.ids()[i]);
            xy.push_back(to_json(map.coords()[i]));
        }
        const auto page = parse_uint_text(query_param(r, "page").value_or("0"), "page");
        json out = paginate(ids, xy, "xy", page, page_size(r));
        out["space"] = to_string(space);
        return out;
    }

    if (head == "point" && parts.size() == 3 && get) {
        const auto id = parse_uint_text(parts[2], "id");
        const auto& rec = engine_->dataset().record(id);
        json out = record_json(rec);
        auto xy = engine_->output_map().find(id);
        out["embed_xy"] = xy ? to_json(*xy) : json(nullptr);
        if (engine_->input_map()) {
            auto ixy = engine_->input_map()->find(id);
            out["input_embed_xy"] = ixy ? to_json(*ixy) : json(nullptr);
        }
        if (auto sel = query_param(r, "selected")) {
            const auto sid = parse_uint_text(*sel, "selected");
            const auto scores = similarity_scores(engine_->dataset(), sid);
            out["similarity_to_selection"] = scores.scores[engine_->dataset().require_row(id)];
        }
        return out;
    }

    if (head == "sensitivity" && parts.size() == 2 && post) {
        const json body = parse_body(r.body);
        if (!body.contains("mixture")) throw Error(ErrorKind::validation, "missing required field mixture", "mixture");
        const auto mixture = mixture_from_json(body["mixture"]);
        const auto j = req_uint(body, "output_index");
        if (j >= kOutputDims) throw Error(ErrorKind::validation, "output_index must be in [0, 64)", "output_index");
        SmoothGradConfig cfg = engine_->config().sensitivity;
        if (auto n = opt_uint(body, "n_samples")) cfg.n_samples = static_cast<int>(*n);
        if (auto s = opt_real(body, "sigma")) cfg.sigma = *s;
        if (auto h = opt_real(body, "fd_step")) cfg.fd_step = *h;
        if (auto s = opt_uint(body, "seed")) cfg.seed = *s;
        try {
            cfg.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::validation, e.what(), e.field());
        }
        json out = to_json(smoothgrad(engine_->model(), mixture.ratios(), static_cast<std::size_t>(j), cfg));
        out["mixture"] = to_json(mixture);
        out["n_samples"] = cfg.n_samples;
        out["sigma"] = cfg.sigma;
        out["seed"] = cfg.seed;
        return out;
    }

    if (head == "similarity" && parts.size() == 2 && get) {
        auto sel = query_param(r, "selected");
        if (!sel) throw Error(ErrorKind::validation, "missing query parameter selected", "selected");
        const auto scores = similarity_scores(engine_->dataset(), parse_uint_text(*sel, "selected"));
        const auto page = parse_uint_text(query_param(r, "page").value_or("0"), "page");
        json out = paginate(json(scores.ids), json(scores.scores), "scores", page, page_size(r));
        out["selected"] = parse_uint_text(*sel, "selected");
        return out;
    }

    throw no_route();
}

// --- HTTP --------------------------------------------------------------------

struct HttpServer::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(Api& api, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)), port_(port) {
    auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query[k] = v;
        r.body = req.body;
        ApiResponse out = api.handle(r);
        res.status = out.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(out.body.dump(), "application/json");
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
    if (port_ == 0) {
        port_ = impl_->server.bind_to_any_port(host_);
        if (port_ < 0) throw Error(ErrorKind::io, "cannot bind to " + host_);
    } else if (!impl_->server.bind_to_port(host_, port_)) {
        throw Error(ErrorKind::io, "cannot bind " + host_ + ":" + std::to_string(port_) + " (port in use?)", "port");
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpServer::run(const std::function<void(int)>& on_ready) {
    if (port_ == 0) {
        port_ = impl_->server.bind_to_any_port(host_);
        if (port_ < 0) throw Error(ErrorKind::io, "cannot bind to " + host_);
    } else if (!impl_->server.bind_to_port(host_, port_)) {
        throw Error(ErrorKind::io, "cannot bind " + host_ + ":" + std::to_string(port_) + " (port in use?)", "port");
    }
    if (on_ready) on_ready(port_);
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mixmap

#include "mixmap/session.hpp"

#include <fstream>

#include "mixmap/fingerprint.hpp"
#include "mixmap/rng.hpp"
#include "mixmap/serialize.hpp"

namespace mixmap {

using json = nlohmann::json;

namespace {

constexpr std::pair<HistoryKind, const char*> kKindNames[] = {
    {HistoryKind::create, "create"},
    {HistoryKind::adjust_input, "adjust-input"},
    {HistoryKind::initial_search, "initial-search"},
    {HistoryKind::select_record, "select-record"},
    {HistoryKind::adjust_output, "adjust-output"},
    {HistoryKind::clear_targets, "clear-targets"},
    {HistoryKind::suggest, "suggest"},
    {HistoryKind::interpolate, "interpolate"},
    {HistoryKind::commit_step, "commit-step"},
    {HistoryKind::free_pick, "free-pick"},
};

std::int64_t wall_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

json hit_ids(const std::vector<NeighborHit>& hits) {
    json ids = json::array();
    for (const auto& h : hits) ids.push_back(h.id);
    return ids;
}

}  // namespace

const char* to_string(HistoryKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "?";
}

HistoryKind parse_history_kind(const std::string& s) {
    for (const auto& [k, name] : kKindNames)
        if (s == name) return k;
    throw Error(ErrorKind::parse, "unknown history entry kind '" + s + "'", "kind");
}

json HistoryEntry::to_json() const {
    return json{{"kind", mixmap::to_string(kind)},
                {"payload", payload},
                {"timestamp_ms", timestamp_ms},
                {"state_hash", state_hash}};
}

HistoryEntry HistoryEntry::from_json(const json& j) {
    try {
        HistoryEntry e;
        e.kind = parse_history_kind(j.at("kind").get<std::string>());
        e.payload = j.at("payload");
        e.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
        e.state_hash = j.value("state_hash", std::string());
        return e;
    } catch (const json::exception& ex) {
        throw Error(ErrorKind::parse, std::string("malformed history entry: ") + ex.what());
    }
}

std::string SessionState::hash() const {
    Fingerprint fp;
    fp.add(seed);
    fp.add(current_mixture.ratios());
    fp.add(current_record.has_value());
    fp.add(current_record.value_or(0));
    fp.add(static_cast<std::uint64_t>(pending_adjustments.size()));
    for (const auto& [j, v] : pending_adjustments) {
        fp.add(static_cast<std::uint64_t>(j));
        fp.add(v);
    }
    fp.add(static_cast<std::uint64_t>(history.size()));
    for (const auto& e : history) {
        fp.add(std::string_view(mixmap::to_string(e.kind)));
        fp.add(std::string_view(e.payload.dump()));
    }
    return fp.hex();
}

json SessionState::to_json() const {
    json adj = json::array();
    for (const auto& [j, v] : pending_adjustments) adj.push_back({{"output_index", j}, {"value", v}});
    return json{{"session_id", id},
                {"seed", seed},
                {"mixture", mixmap::to_json(current_mixture)},
                {"current_record", current_record ? json(*current_record) : json(nullptr)},
                {"pending_adjustments", adj},
                {"revision", revision()},
                {"state_hash", hash()}};
}

// ---------------------------------------------------------------------------

Session::Session(const Engine& engine, Sink sink, Clock clock)
    : engine_(&engine), sink_(std::move(sink)), clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {}

Session Session::create(const Engine& engine, std::uint64_t seed, std::string id, Sink sink, Clock clock) {
    Session s(engine, std::move(sink), std::move(clock));
    s.state_.seed = seed;
    s.state_.id = id.empty() ? "s-" + Fingerprint::to_hex(derive_seed(seed, static_cast<std::uint64_t>(wall_clock_ms())))
                             : std::move(id);
    s.state_.current_mixture = uniform_sample(seed);
    s.record(HistoryKind::create, json{{"seed", seed}, {"session_id", s.state_.id},
                                       {"mixture", to_json(s.state_.current_mixture)}});
    return s;
}

void Session::record(HistoryKind kind, json payload) {
    HistoryEntry e;
    e.kind = kind;
    e.payload = std::move(payload);
    e.timestamp_ms = replay_timestamp_ ? *replay_timestamp_ : clock_();
    state_.history.push_back(std::move(e));
    state_.history.back().state_hash = state_.hash();
    if (sink_) sink_(state_.history.back());
}

void Session::require_anchor(const char* what) const {
    if (!state_.current_record)
        throw Error(ErrorKind::state,
                    std::string(what) + " needs an anchored record: search and select a mixture first");
}

void Session::anchor(RecordId id) {
    const auto& rec = engine_->dataset().record(id);
    state_.current_record = id;
    state_.current_mixture = rec.input;
    state_.pending_adjustments.clear();
}

void Session::adjust_input(std::size_t dim, double value) {
    state_.current_mixture = rescale_dimension(state_.current_mixture, dim, value);
    state_.current_record.reset();
    record(HistoryKind::adjust_input,
           json{{"dim", dim}, {"value", value}, {"mixture", to_json(state_.current_mixture)}});
}

std::vector<NeighborHit> Session::search_initial(std::optional<std::size_t> k) {
    const std::size_t kk = k.value_or(engine_->config().default_k);
    auto hits = engine_->input_index().query(state_.current_mixture, kk);
    record(HistoryKind::initial_search, json{{"k", kk}, {"hits", hit_ids(hits)}});
    return hits;
}

void Session::select_record(RecordId id) {
    anchor(id);
    record(HistoryKind::select_record, json{{"record_id", id}});
}

void Session::free_pick(RecordId id) {
    anchor(id);
    record(HistoryKind::free_pick, json{{"record_id", id}});
}

void Session::adjust_output_target(std::size_t j, double target) {
    require_anchor("adjusting an output target");
    if (j >= kOutputDims) throw Error(ErrorKind::validation, "output index out of range", "output_index");
    if (!std::isfinite(target)) throw Error(ErrorKind::validation, "target must be finite", "value");
    state_.pending_adjustments[j] = target;
    record(HistoryKind::adjust_output, json{{"output_index", j}, {"value", target}});
}

void Session::clear_targets() {
    state_.pending_adjustments.clear();
    record(HistoryKind::clear_targets, json::object());
}

OutputVector Session::suggest_target() const {
    require_anchor("suggest");
    OutputVector t = engine_->dataset().record(*state_.current_record).output;
    for (const auto& [j, v] : state_.pending_adjustments) t[j] = v;
    return t;
}

WeightedMetric Session::suggest_metric(double beta) const {
    std::vector<std::size_t> adjusted;
    for (const auto& [j, v] : state_.pending_adjustments) adjusted.push_back(j);
    return WeightedMetric::emphasized(engine_->stats(), adjusted, beta);
}

std::vector<NeighborHit> Session::suggest(std::optional<std::size_t> k, std::optional<double> beta) {
    const auto target = suggest_target();
    const std::size_t kk = k.value_or(engine_->config().default_k);
    const double b = beta.value_or(engine_->config().beta);
    auto hits = engine_->output_index().query(target, suggest_metric(b), kk);
    record(HistoryKind::suggest, json{{"k", kk}, {"beta", b}, {"hits", hit_ids(hits)}});
    return hits;
}

const InterpolationPath& Session::interpolate_to(RecordId to_id, std::optional<std::size_t> n_steps) {
    require_anchor("interpolation");
    const std::size_t steps = n_steps.value_or(engine_->config().default_steps);
    const auto& to = engine_->dataset().record(to_id);
    PathEndpoint from{state_.current_record, state_.current_mixture};
    auto path = trace_path(engine_->model(), engine_->snap_index(), engine_->output_map(), from,
                           PathEndpoint{to_id, to.input}, steps);
    json snapped = json::array();
    for (const auto& st : path.steps) snapped.push_back(st.snapped_id);
    state_.last_path = std::move(path);
    record(HistoryKind::interpolate, json{{"to_id", to_id}, {"steps", steps}, {"snapped_ids", snapped}});
    return *state_.last_path;
}

void Session::commit_step(std::size_t step_index) {
    if (!state_.last_path) throw Error(ErrorKind::state, "no interpolation path to commit from");
    const auto& path = *state_.last_path;
    if (step_index >= path.steps.size())
        throw Error(ErrorKind::validation, "step index out of range", "step_index");
    const auto& step = path.steps[step_index];
    state_.current_record = step.snapped_id;
    state_.current_mixture = step.input;
    state_.pending_adjustments.clear();
    record(HistoryKind::commit_step, json{{"step_index", step_index},
                                          {"lambda", step.lambda},
                                          {"snapped_id", step.snapped_id},
                                          {"mixture", to_json(step.input)}});
}

void Session::apply(const HistoryEntry& e) {
    replay_timestamp_ = e.timestamp_ms;
    const auto& p = e.payload;
    try {
        switch (e.kind) {
            case HistoryKind::create:
                throw Error(ErrorKind::parse, "create entry may only appear first");
            case HistoryKind::adjust_input:
                adjust_input(p.at("dim").get<std::size_t>(), p.at("value").get<double>());
                break;
            case HistoryKind::initial_search:
                search_initial(p.at("k").get<std::size_t>());
                break;
            case HistoryKind::select_record:
                select_record(p.at("record_id").get<RecordId>());
                break;
            case HistoryKind::adjust_output:
                adjust_output_target(p.at("output_index").get<std::size_t>(), p.at("value").get<double>());
                break;
            case HistoryKind::clear_targets:
                clear_targets();
                break;
            case HistoryKind::suggest:
                suggest(p.at("k").get<std::size_t>(), p.at("beta").get<double>());
                break;
            case HistoryKind::interpolate:
                interpolate_to(p.at("to_id").get<RecordId>(), p.at("steps").get<std::size_t>());
                break;
            case HistoryKind::commit_step:
                commit_step(p.at("step_index").get<std::size_t>());
                break;
            case HistoryKind::free_pick:
                free_pick(p.at("record_id").get<RecordId>());
                break;
        }
    } catch (const json::exception& ex) {
        replay_timestamp_.reset();
        throw Error(ErrorKind::parse, std::string("malformed ") + to_string(e.kind) + " entry: " + ex.what());
    }
    replay_timestamp_.reset();
}

Session Session::replay(const Engine& engine, const std::vector<HistoryEntry>& entries, Sink sink) {
    if (entries.empty() || entries.front().kind != HistoryKind::create)
        throw Error(ErrorKind::parse, "session log must start with a create entry");
    const auto& first = entries.front();
    Session s(engine, {}, {});
    s.replay_timestamp_ = first.timestamp_ms;
    const auto seed = first.payload.at("seed").get<std::uint64_t>();
    s.state_.seed = seed;
    s.state_.id = first.payload.value("session_id", std::string("replay"));
    s.state_.current_mixture = uniform_sample(seed);
    s.record(HistoryKind::create, json{{"seed", seed}, {"session_id", s.state_.id},
                                       {"mixture", to_json(s.state_.current_mixture)}});
    s.replay_timestamp_.reset();
    auto check = [&](const HistoryEntry& recorded, std::size_t index) {
        const auto& now = s.state_.history.back();
        if (!recorded.state_hash.empty() && recorded.state_hash != now.state_hash)
            throw Error(ErrorKind::validation, "replay diverged at entry " + std::to_string(index) + " (" +
                                                   to_string(recorded.kind) + "): recorded hash " +
                                                   recorded.state_hash + ", replayed " + now.state_hash);
    };
    check(first, 0);
    for (std::size_t i = 1; i < entries.size(); ++i) {
        s.apply(entries[i]);
        check(entries[i], i);
    }
    s.sink_ = std::move(sink);
    return s;
}

void append_log(const std::filesystem::path& path, const HistoryEntry& entry) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot append to session log " + path.string());
    out << entry.to_json().dump() << '\n';
}

std::vector<HistoryEntry> read_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open session log " + path.string());
    std::vector<HistoryEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            entries.push_back(HistoryEntry::from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw Error(ErrorKind::parse, "session log line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return entries;
}

}  // namespace mixmap

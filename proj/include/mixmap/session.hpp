#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixmap/engine.hpp"
#include "mixmap/pathfinder.hpp"

namespace mixmap {

enum class HistoryKind {
    create,
    adjust_input,
    initial_search,
    select_record,
    adjust_output,
    clear_targets,
    suggest,
    interpolate,
    commit_step,
    free_pick,
};

const char* to_string(HistoryKind kind);
HistoryKind parse_history_kind(const std::string& s);

struct HistoryEntry {
    HistoryKind kind = HistoryKind::create;
    nlohmann::json payload;      // operation arguments plus a result snapshot
    std::int64_t timestamp_ms = 0;
    std::string state_hash;      // hash of the state after this entry

    nlohmann::json to_json() const;
    static HistoryEntry from_json(const nlohmann::json& j);
};

struct SessionState {
    std::string id;
    std::uint64_t seed = 0;
    InputMixture current_mixture;
    std::optional<RecordId> current_record;
    std::map<std::size_t, double> pending_adjustments;  // output index -> absolute target
    std::vector<HistoryEntry> history;
    std::optional<InterpolationPath> last_path;

    std::uint64_t revision() const { return history.size(); }
    // Covers everything except timestamps.
    std::string hash() const;
    nlohmann::json to_json() const;  // summary without history
};

// Single-writer workflow state machine. Every mutating call appends one
// history entry; replaying the entries over a fresh session reproduces the
// state exactly.
class Session {
public:
    using Clock = std::function<std::int64_t()>;
    using Sink = std::function<void(const HistoryEntry&)>;

    static Session create(const Engine& engine, std::uint64_t seed, std::string id = {}, Sink sink = {},
                          Clock clock = {});

    const SessionState& state() const { return state_; }
    const std::string& id() const { return state_.id; }

    void adjust_input(std::size_t dim, double value);
    std::vector<NeighborHit> search_initial(std::optional<std::size_t> k = std::nullopt);
    void select_record(RecordId id);
    void adjust_output_target(std::size_t j, double target);
    void clear_targets();
    std::vector<NeighborHit> suggest(std::optional<std::size_t> k = std::nullopt,
                                     std::optional<double> beta = std::nullopt);
    const InterpolationPath& interpolate_to(RecordId to_id, std::optional<std::size_t> n_steps = std::nullopt);
    // Commits a step of the most recent path.
    void commit_step(std::size_t step_index);
    void free_pick(RecordId id);

    // Metric suggest() would use right now.
    WeightedMetric suggest_metric(double beta) const;
    OutputVector suggest_target() const;

    // Folds entries over a fresh session; checks recorded hashes when present.
    static Session replay(const Engine& engine, const std::vector<HistoryEntry>& entries, Sink sink = {});

private:
    Session(const Engine& engine, Sink sink, Clock clock);
    void apply(const HistoryEntry& entry);
    void record(HistoryKind kind, nlohmann::json payload);
    void anchor(RecordId id);
    void require_anchor(const char* what) const;

    const Engine* engine_;
    SessionState state_;
    Sink sink_;
    Clock clock_;
    std::optional<std::int64_t> replay_timestamp_;
};

// Line-delimited JSON session logs.
void append_log(const std::filesystem::path& path, const HistoryEntry& entry);
std::vector<HistoryEntry> read_log(const std::filesystem::path& path);

}  // namespace mixmap

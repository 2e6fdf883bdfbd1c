#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixmap/common.hpp"

namespace mixmap {

// Tolerances for the mixture simplex.
inline constexpr double kSimplexSumTolerance = 1e-9;
inline constexpr double kValidateTolerance = 1e-6;
inline constexpr double kIngestSumTolerance = 1e-3;

enum class IdPolicy { row_order, explicit_column };

struct ColumnSchema {
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    IdPolicy id_policy = IdPolicy::row_order;
    std::string id_column = "id";

    // Throws Error(schema) unless there are exactly 6 inputs and 64 outputs,
    // all names distinct and non-empty.
    void validate() const;

    // in_0..in_5, out_0..out_63, row-order ids.
    static ColumnSchema generic();
    static ColumnSchema load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    std::string to_json() const;
    static ColumnSchema from_json(const std::string& text);
};

// A point on the 6-simplex. Constructed through validate_mixture() or the
// operations below, which all preserve the simplex invariants.
class InputMixture {
public:
    InputMixture() { ratios_.fill(1.0 / kInputDims); }

    // Wraps ratios that the caller guarantees lie on the simplex.
    static InputMixture trusted(const InputPoint& ratios) { return InputMixture(ratios); }

    double operator[](std::size_t i) const { return ratios_[i]; }
    const InputPoint& ratios() const { return ratios_; }
    double sum() const;

    friend bool operator==(const InputMixture&, const InputMixture&) = default;

private:
    explicit InputMixture(const InputPoint& r) : ratios_(r) {}
    InputPoint ratios_;
};

// Accepts iff every ratio is in [0,1] and the sum is 1, both within 1e-6;
// the result is renormalized to sum 1. Error(validation) lists offenders.
InputMixture validate_mixture(std::span<const double> ratios);

// Sets ratio `dim` to `new_value` and scales the other five by a common
// factor so the result stays on the simplex. A vertex (old value 1) spreads
// the remainder equally.
InputMixture rescale_dimension(const InputMixture& mixture, std::size_t dim, double new_value);

// Flat Dirichlet draw via normalized exponentials; deterministic per seed.
InputMixture uniform_sample(std::uint64_t seed);

class Rng;
InputMixture uniform_sample(Rng& rng);

struct SampleRecord {
    RecordId id = 0;
    InputMixture input;
    OutputVector output{};
};

struct NormalizationStats {
    OutputVector output_mean{};
    OutputVector output_std{};
    OutputVector output_min{};
    OutputVector output_max{};
    std::array<bool, kOutputDims> output_constant{};
    InputPoint input_min{};
    InputPoint input_max{};

    // Divisor used for standardized output distances; 1 for constant dims.
    double scale(std::size_t j) const { return output_constant[j] ? 1.0 : output_std[j]; }
    std::size_t n_constant() const;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(ColumnSchema schema, std::vector<SampleRecord> records);

    const ColumnSchema& schema() const { return schema_; }
    const std::vector<SampleRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const SampleRecord& operator[](std::size_t row) const { return records_[row]; }

    // Records are kept sorted by ascending id, so row order equals id order.
    std::optional<std::size_t> row_of(RecordId id) const;
    std::size_t require_row(RecordId id) const;  // throws Error(not_found)
    const SampleRecord& record(RecordId id) const { return records_[require_row(id)]; }

    bool has_stats() const { return stats_.has_value(); }
    const NormalizationStats& stats() const;
    void set_stats(NormalizationStats stats) { stats_ = std::move(stats); }

    // Copy of the given rows; ids are preserved.
    Dataset subset(std::span<const std::size_t> rows) const;

    // Stable content hash over schema, ids, inputs and outputs.
    std::string fingerprint() const;

private:
    ColumnSchema schema_;
    std::vector<SampleRecord> records_;
    std::optional<NormalizationStats> stats_;
};

using DatasetPtr = std::shared_ptr<const Dataset>;

struct LoadReport {
    std::size_t rows = 0;
    std::size_t renormalized = 0;
    bool from_cache = false;
};

Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema,
                 LoadReport* report = nullptr);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

// Binary cache beside the CSV, keyed by the CSV content hash.
std::filesystem::path cache_path_for(const std::filesystem::path& csv_path);
void write_cache(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_cache(const std::filesystem::path& path);

// load_csv with a content-addressed cache: reuses a valid cache file and
// writes one when `write_if_missing` is set.
Dataset load_dataset(const std::filesystem::path& csv_path, const ColumnSchema& schema,
                     bool write_if_missing, LoadReport* report = nullptr);

NormalizationStats compute_stats(const Dataset& dataset);

}  // namespace mixmap

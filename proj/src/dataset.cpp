#include "mixmap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mixmap/fingerprint.hpp"
#include "mixmap/rng.hpp"

namespace mixmap {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// ColumnSchema

void ColumnSchema::validate() const {
    if (input_names.size() != kInputDims)
        throw Error(ErrorKind::schema,
                    "schema must declare exactly 6 input columns, got " +
                        std::to_string(input_names.size()),
                    "input_names");
    if (output_names.size() != kOutputDims)
        throw Error(ErrorKind::schema,
                    "schema must declare exactly 64 output columns, got " +
                        std::to_string(output_names.size()),
                    "output_names");
    std::unordered_set<std::string> seen;
    auto check = [&](const std::string& name, const char* field) {
        if (name.empty()) throw Error(ErrorKind::schema, "empty column name", field);
        if (!seen.insert(name).second)
            throw Error(ErrorKind::schema, "duplicate column name '" + name + "'", field);
    };
    for (const auto& n : input_names) check(n, "input_names");
    for (const auto& n : output_names) check(n, "output_names");
    if (id_policy == IdPolicy::explicit_column) check(id_column, "id_column");
}

ColumnSchema ColumnSchema::generic() {
    ColumnSchema s;
    for (std::size_t i = 0; i < kInputDims; ++i) s.input_names.push_back("in_" + std::to_string(i));
    for (std::size_t j = 0; j < kOutputDims; ++j) s.output_names.push_back("out_" + std::to_string(j));
    return s;
}

std::string ColumnSchema::to_json() const {
    json j;
    j["input_names"] = input_names;
    j["output_names"] = output_names;
    j["id_policy"] = id_policy == IdPolicy::row_order ? "row-order" : "explicit-id-column";
    if (id_policy == IdPolicy::explicit_column) j["id_column"] = id_column;
    return j.dump(2);
}

ColumnSchema ColumnSchema::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, std::string("schema file is not valid JSON: ") + e.what());
    }
    ColumnSchema s;
    try {
        s.input_names = j.at("input_names").get<std::vector<std::string>>();
        s.output_names = j.at("output_names").get<std::vector<std::string>>();
        const auto policy = j.value("id_policy", std::string("row-order"));
        if (policy == "row-order") {
            s.id_policy = IdPolicy::row_order;
        } else if (policy == "explicit-id-column") {
            s.id_policy = IdPolicy::explicit_column;
            s.id_column = j.value("id_column", std::string("id"));
        } else {
            throw Error(ErrorKind::schema, "unknown id_policy '" + policy + "'", "id_policy");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, std::string("malformed schema: ") + e.what());
    }
    s.validate();
    return s;
}

ColumnSchema ColumnSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open schema file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void ColumnSchema::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write schema file " + path.string());
    out << to_json() << '\n';
}

// ---------------------------------------------------------------------------
// Simplex arithmetic

double InputMixture::sum() const {
    double s = 0.0;
    for (double r : ratios_) s += r;
    return s;
}

namespace {

InputPoint normalized(InputPoint r) {
    double s = 0.0;
    for (double v : r) s += v;
    for (double& v : r) v = std::clamp(v / s, 0.0, 1.0);
    return r;
}

}  // namespace

InputMixture validate_mixture(std::span<const double> ratios) {
    if (ratios.size() != kInputDims)
        throw Error(ErrorKind::validation,
                    "mixture needs 6 ratios, got " + std::to_string(ratios.size()), "mixture");
    std::vector<std::string> problems;
    double sum = 0.0;
    for (std::size_t i = 0; i < kInputDims; ++i) {
        const double v = ratios[i];
        if (!std::isfinite(v) || v < -kValidateTolerance || v > 1.0 + kValidateTolerance)
            problems.push_back("dim " + std::to_string(i) + " out of range (" + std::to_string(v) + ")");
        sum += v;
    }
    if (std::isfinite(sum) && std::abs(sum - 1.0) > kValidateTolerance)
        problems.push_back("ratios sum to " + std::to_string(sum) + ", expected 1");
    if (!problems.empty()) {
        std::string msg = "invalid mixture: ";
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        throw Error(ErrorKind::validation, msg, "mixture");
    }
    InputPoint r;
    bool exact = std::abs(sum - 1.0) <= kSimplexSumTolerance;
    for (std::size_t i = 0; i < kInputDims; ++i) {
        r[i] = ratios[i];
        exact = exact && r[i] >= 0.0 && r[i] <= 1.0;
    }
    if (exact) return InputMixture::trusted(r);
    for (double& v : r) v = std::max(v, 0.0);
    return InputMixture::trusted(normalized(r));
}

InputMixture rescale_dimension(const InputMixture& mixture, std::size_t dim, double new_value) {
    if (dim >= kInputDims)
        throw Error(ErrorKind::validation, "input dimension out of range: " + std::to_string(dim), "dim");
    if (!(new_value >= 0.0 && new_value <= 1.0))
        throw Error(ErrorKind::validation, "new value must lie in [0,1]", "value");

    const double old_value = mixture[dim];
    if (new_value == old_value) return mixture;

    InputPoint r = mixture.ratios();
    const double rest_old = 1.0 - old_value;
    const double rest_new = 1.0 - new_value;
    double others = 0.0;
    for (std::size_t i = 0; i < kInputDims; ++i)
        if (i != dim) others += r[i];

    if (rest_old <= 0.0 || others <= 0.0) {
        const double share = rest_new / static_cast<double>(kInputDims - 1);
        for (std::size_t i = 0; i < kInputDims; ++i) r[i] = share;
    } else {
        const double factor = rest_new / rest_old;
        for (std::size_t i = 0; i < kInputDims; ++i) r[i] = std::min(r[i] * factor, 1.0);
    }
    r[dim] = new_value;
    return InputMixture::trusted(r);
}

InputMixture uniform_sample(Rng& rng) {
    InputPoint r;
    double s = 0.0;
    do {
        s = 0.0;
        for (double& v : r) {
            v = rng.exponential();
            s += v;
        }
    } while (s <= 0.0);
    for (double& v : r) v /= s;
    return InputMixture::trusted(r);
}

InputMixture uniform_sample(std::uint64_t seed) {
    Rng rng(seed);
    return uniform_sample(rng);
}

// ---------------------------------------------------------------------------
// Dataset

std::size_t NormalizationStats::n_constant() const {
    return static_cast<std::size_t>(std::count(output_constant.begin(), output_constant.end(), true));
}

Dataset::Dataset(ColumnSchema schema, std::vector<SampleRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
    std::stable_sort(records_.begin(), records_.end(),
                     [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records_.size(); ++i)
        if (records_[i].id == records_[i - 1].id)
            throw Error(ErrorKind::validation, "duplicate record id " + std::to_string(records_[i].id));
}

std::optional<std::size_t> Dataset::row_of(RecordId id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), id,
                               [](const SampleRecord& r, RecordId v) { return r.id < v; });
    if (it == records_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - records_.begin());
}

std::size_t Dataset::require_row(RecordId id) const {
    auto row = row_of(id);
    if (!row) throw Error(ErrorKind::not_found, "unknown record id " + std::to_string(id), "record_id");
    return *row;
}

const NormalizationStats& Dataset::stats() const {
    if (!stats_) throw Error(ErrorKind::state, "normalization stats have not been computed");
    return *stats_;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    std::vector<SampleRecord> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(records_.at(r));
    return Dataset(schema_, std::move(out));
}

std::string Dataset::fingerprint() const {
    Fingerprint fp;
    for (const auto& n : schema_.input_names) fp.add(std::string_view(n));
    for (const auto& n : schema_.output_names) fp.add(std::string_view(n));
    fp.add(static_cast<std::uint64_t>(records_.size()));
    for (const auto& rec : records_) {
        fp.add(rec.id);
        fp.add(rec.input.ratios());
        fp.add(rec.output);
    }
    return fp.hex();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

double parse_double(std::string_view cell, std::size_t line_no, const std::string& column) {
    double v = 0.0;
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v))
        throw Error(ErrorKind::parse,
                    "row " + std::to_string(line_no) + ": non-numeric value '" + std::string(cell) +
                        "' in column '" + column + "'",
                    column);
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema, LoadReport* report) {
    schema.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open dataset " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::schema, "dataset has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string_view> fields;
    split_fields(line, fields);
    std::unordered_map<std::string, std::size_t> header;
    for (std::size_t i = 0; i < fields.size(); ++i) header.emplace(std::string(fields[i]), i);
    auto locate = [&](const std::string& name) {
        auto it = header.find(name);
        if (it == header.end()) throw Error(ErrorKind::schema, "missing column '" + name + "'", name);
        return it->second;
    };
    std::array<std::size_t, kInputDims> in_cols;
    std::array<std::size_t, kOutputDims> out_cols;
    for (std::size_t i = 0; i < kInputDims; ++i) in_cols[i] = locate(schema.input_names[i]);
    for (std::size_t j = 0; j < kOutputDims; ++j) out_cols[j] = locate(schema.output_names[j]);
    std::optional<std::size_t> id_col;
    if (schema.id_policy == IdPolicy::explicit_column) id_col = locate(schema.id_column);

    std::vector<SampleRecord> records;
    LoadReport rep;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        split_fields(line, fields);
        if (fields.size() < header.size())
            throw Error(ErrorKind::parse, "row " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
        SampleRecord rec;
        if (id_col) {
            const auto cell = fields[*id_col];
            RecordId id = 0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), id);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
                throw Error(ErrorKind::parse, "row " + std::to_string(line_no) + ": bad id '" +
                                                  std::string(cell) + "'",
                            schema.id_column);
            rec.id = id;
        } else {
            rec.id = records.size();
        }
        InputPoint r;
        double sum = 0.0;
        bool in_range = true;
        for (std::size_t i = 0; i < kInputDims; ++i) {
            r[i] = parse_double(fields[in_cols[i]], line_no, schema.input_names[i]);
            in_range = in_range && r[i] >= -kIngestSumTolerance && r[i] <= 1.0 + kIngestSumTolerance;
            sum += r[i];
        }
        if (!in_range || std::abs(sum - 1.0) > kIngestSumTolerance)
            throw Error(ErrorKind::validation,
                        "row " + std::to_string(line_no) + ": input ratios sum to " +
                            format_double(sum) + ", not a mixture");
        if (std::abs(sum - 1.0) > kSimplexSumTolerance ||
            std::any_of(r.begin(), r.end(), [](double v) { return v < 0.0 || v > 1.0; })) {
            for (double& v : r) v = std::max(v, 0.0);
            r = normalized(r);
            ++rep.renormalized;
        }
        rec.input = InputMixture::trusted(r);
        for (std::size_t j = 0; j < kOutputDims; ++j)
            rec.output[j] = parse_double(fields[out_cols[j]], line_no, schema.output_names[j]);
        records.push_back(rec);
    }
    rep.rows = records.size();
    if (report) *report = rep;
    return Dataset(schema, std::move(records));
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    const auto& schema = dataset.schema();
    const bool explicit_ids = schema.id_policy == IdPolicy::explicit_column;
    std::string line;
    if (explicit_ids) line += schema.id_column + ",";
    for (const auto& n : schema.input_names) line += n + ",";
    for (std::size_t j = 0; j < kOutputDims; ++j) line += schema.output_names[j] + (j + 1 < kOutputDims ? "," : "\n");
    out << line;
    for (const auto& rec : dataset.records()) {
        line.clear();
        if (explicit_ids) line += std::to_string(rec.id) + ",";
        for (double v : rec.input.ratios()) line += format_double(v) + ",";
        for (std::size_t j = 0; j < kOutputDims; ++j)
            line += format_double(rec.output[j]) + (j + 1 < kOutputDims ? "," : "\n");
        out << line;
    }
}

// ---------------------------------------------------------------------------
// Binary cache

namespace {

constexpr char kCacheMagic[8] = {'M', 'M', 'D', 'S', 'E', 'T', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error(ErrorKind::io, "truncated dataset cache");
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (1u << 20)) throw Error(ErrorKind::io, "corrupt dataset cache");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw Error(ErrorKind::io, "truncated dataset cache");
    return s;
}

}  // namespace

std::filesystem::path cache_path_for(const std::filesystem::path& csv_path) {
    const auto hash = fingerprint_file(csv_path.string());
    auto p = csv_path;
    p += "." + hash + ".mmcache";
    return p;
}

void write_cache(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write cache " + path.string());
    out.write(kCacheMagic, sizeof(kCacheMagic));
    put_string(out, dataset.schema().to_json());
    put<std::uint64_t>(out, dataset.size());
    for (const auto& rec : dataset.records()) {
        put(out, rec.id);
        put(out, rec.input.ratios());
        put(out, rec.output);
    }
}

Dataset read_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open cache " + path.string());
    char magic[sizeof(kCacheMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kCacheMagic)))
        throw Error(ErrorKind::io, "not a dataset cache: " + path.string());
    auto schema = ColumnSchema::from_json(get_string(in));
    const auto n = get<std::uint64_t>(in);
    std::vector<SampleRecord> records(n);
    for (auto& rec : records) {
        rec.id = get<RecordId>(in);
        rec.input = InputMixture::trusted(get<InputPoint>(in));
        rec.output = get<OutputVector>(in);
    }
    return Dataset(std::move(schema), std::move(records));
}

Dataset load_dataset(const std::filesystem::path& csv_path, const ColumnSchema& schema,
                     bool write_if_missing, LoadReport* report) {
    const auto cache = cache_path_for(csv_path);
    if (std::filesystem::exists(cache)) {
        Dataset ds = read_cache(cache);
        const auto& cs = ds.schema();
        if (cs.input_names == schema.input_names && cs.output_names == schema.output_names &&
            cs.id_policy == schema.id_policy) {
            if (report) *report = LoadReport{ds.size(), 0, true};
            return ds;
        }
    }
    Dataset ds = load_csv(csv_path, schema, report);
    if (write_if_missing) write_cache(ds, cache);
    return ds;
}

// ---------------------------------------------------------------------------
// Stats

NormalizationStats compute_stats(const Dataset& dataset) {
    if (dataset.empty()) throw Error(ErrorKind::state, "cannot compute stats of an empty dataset");
    NormalizationStats s;
    const double n = static_cast<double>(dataset.size());
    s.output_min.fill(std::numeric_limits<double>::infinity());
    s.output_max.fill(-std::numeric_limits<double>::infinity());
    s.input_min.fill(std::numeric_limits<double>::infinity());
    s.input_max.fill(-std::numeric_limits<double>::infinity());
    OutputVector sum{};
    for (const auto& rec : dataset.records()) {
        for (std::size_t j = 0; j < kOutputDims; ++j) {
            sum[j] += rec.output[j];
            s.output_min[j] = std::min(s.output_min[j], rec.output[j]);
            s.output_max[j] = std::max(s.output_max[j], rec.output[j]);
        }
        for (std::size_t i = 0; i < kInputDims; ++i) {
            s.input_min[i] = std::min(s.input_min[i], rec.input[i]);
            s.input_max[i] = std::max(s.input_max[i], rec.input[i]);
        }
    }
    for (std::size_t j = 0; j < kOutputDims; ++j) s.output_mean[j] = sum[j] / n;
    OutputVector sq{};
    for (const auto& rec : dataset.records())
        for (std::size_t j = 0; j < kOutputDims; ++j) {
            const double d = rec.output[j] - s.output_mean[j];
            sq[j] += d * d;
        }
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        s.output_constant[j] = s.output_min[j] == s.output_max[j];
        if (s.output_constant[j]) {
            s.output_mean[j] = s.output_min[j];
            s.output_std[j] = 0.0;
        } else {
            s.output_std[j] = std::sqrt(sq[j] / n);
        }
    }
    return s;
}

}  // namespace mixmap

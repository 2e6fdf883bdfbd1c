#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace mixmap {

inline constexpr std::size_t kInputDims = 6;
inline constexpr std::size_t kOutputDims = 64;

using RecordId = std::uint64_t;

// Raw point in the ambient input box. Not necessarily on the simplex.
using InputPoint = std::array<double, kInputDims>;
using OutputVector = std::array<double, kOutputDims>;

enum class ErrorKind {
    schema,
    parse,
    validation,
    not_found,
    invalid_argument,
    state,
    io,
    busy,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string field = {})
        : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorKind kind_;
    std::string field_;
};

}  // namespace mixmap

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mixmap {

// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
// concurrency). Callers keep per-index results independent, so the output
// never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    constexpr std::size_t kChunk = 64;
    auto body = [&] {
        for (std::size_t start = next.fetch_add(kChunk); start < n; start = next.fetch_add(kChunk))
            for (std::size_t i = start; i < std::min(n, start + kChunk); ++i) fn(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
}

}  // namespace mixmap

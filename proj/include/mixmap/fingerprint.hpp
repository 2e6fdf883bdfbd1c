#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace mixmap {

// Incremental FNV-1a (64 bit). Used for artifact fingerprints and cache keys.
class Fingerprint {
public:
    void add_bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }

    void add(std::string_view s) {
        add(static_cast<std::uint64_t>(s.size()));
        add_bytes(s.data(), s.size());
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void add(const T& value) {
        add_bytes(&value, sizeof(T));
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void add(std::span<const T> values) {
        add(static_cast<std::uint64_t>(values.size()));
        add_bytes(values.data(), values.size_bytes());
    }

    std::uint64_t value() const { return state_; }
    std::string hex() const { return to_hex(state_); }

    static std::string to_hex(std::uint64_t v);

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fingerprint_file(const std::string& path);

}  // namespace mixmap

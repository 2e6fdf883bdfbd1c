#include "mixmap/common.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "mixmap/fingerprint.hpp"

namespace mixmap {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::schema: return "schema_error";
        case ErrorKind::parse: return "parse_error";
        case ErrorKind::validation: return "validation_error";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::state: return "state_error";
        case ErrorKind::io: return "io_error";
        case ErrorKind::busy: return "session_busy";
    }
    return "error";
}

std::string Fingerprint::to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fingerprint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    Fingerprint fp;
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        fp.add_bytes(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return fp.hex();
}

}  // namespace mixmap

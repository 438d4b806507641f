#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nids {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a required input file/artifact is absent; the CLI maps it to exit code 2.
class MissingInputError : public Error {
public:
    using Error::Error;
};

// splitmix64 finalizer; used to derive independent sub-seeds from a master seed
// so parallel units (trees, classes, rounds) never share engine state.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Shortest round-trip decimal form (to_chars); parsing it back yields the same bits.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int places) {
    char buf[64];
    int n = std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return std::string(buf, buf + n);
}

inline std::optional<double> parse_double(std::string_view s) {
    // leading/trailing whitespace is not accepted; the whole token must parse
    double v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

} // namespace nids

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace steproute {

// FNV-1a, 64 bit. Used for context keys and config hashes; must stay stable
// across runs and platforms (std::hash gives no such guarantee).
constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a(std::string_view data, uint64_t h = kFnvOffset) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a_mix(uint64_t value, uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (i * 8)) & 0xffu;
        h *= kFnvPrime;
    }
    return h;
}

std::string hex64(uint64_t v);

inline std::string stable_hash_hex(std::string_view data) { return hex64(fnv1a(data)); }

// Whitespace trim / collapse used by answer normalization and parsing.
std::string trim(std::string_view s);
std::string collapse_spaces(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Splits on every occurrence of `sep` (literal, non-empty). Keeps empty
// pieces, so joining with `sep` is the exact inverse.
std::vector<std::string> split_literal(std::string_view text, std::string_view sep);

// Reads all lines of a file. Throws IoError when the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

// Writes `content` to `path`, replacing any existing file.
void write_file(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

} // namespace steproute

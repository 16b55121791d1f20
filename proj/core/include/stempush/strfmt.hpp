#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stempush {

// Shortest decimal form that round-trips to the same double (std::to_chars).
// Used everywhere a number is serialized so output files are byte-stable.
std::string fmt_double(double v);
std::string fmt_int(long long v);

// FNV-1a, 64-bit.
uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 1469598103934665603ull);
uint64_t fnv1a64(const std::string& s, uint64_t h = 1469598103934665603ull);
std::string hex64(uint64_t v);

// Minimal CSV helpers. Emitted fields never contain commas, quotes or
// newlines, so no quoting rules are needed.
std::string join_csv(const std::vector<std::string>& fields);
std::vector<std::string> split_csv_line(const std::string& line);

double parse_double(const std::string& s);  // strict; throws ValidationError

}  // namespace stempush

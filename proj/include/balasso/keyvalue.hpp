#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace balasso {

// Ordered `key = value` records. Used for chain provenance, run manifests and
// the CLI config files.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string format_key_values(const KeyValues& entries);
KeyValues parse_key_values(std::string_view text);
const std::string* find_value(const KeyValues& entries, std::string_view key);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::span<const double> values, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t hash_key_values(const KeyValues& entries);

std::string to_hex(std::uint64_t value);
std::uint64_t from_hex(std::string_view text);

// Shortest decimal that reads back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);  // throws std::invalid_argument

}  // namespace balasso

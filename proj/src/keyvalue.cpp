#include "balasso/keyvalue.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace balasso {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_key_values(const KeyValues& entries) {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = (eol == std::string_view::npos) ? std::string_view{} : text.substr(eol + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected `key = value`");
    entries.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return entries;
}

const std::string* find_value(const KeyValues& entries, std::string_view key) {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::span<const double> values, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (double v : values) {
    std::array<char, sizeof(double)> raw;
    std::memcpy(raw.data(), &v, sizeof(double));
    h = fnv1a(std::string_view(raw.data(), raw.size()), h);
  }
  return h;
}

std::uint64_t hash_key_values(const KeyValues& entries) { return fnv1a(format_key_values(entries)); }

std::string to_hex(std::uint64_t value) {
  std::array<char, 17> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + 16, value, 16);
  std::string digits(buf.data(), ptr);
  return std::string(16 - digits.size(), '0') + digits;
}

std::uint64_t from_hex(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("not a hexadecimal value: " + std::string(text));
  return value;
}

std::string format_double(double value) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return value;
}

}  // namespace balasso

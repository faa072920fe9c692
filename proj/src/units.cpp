#include "migplan/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

#include "migplan/error.hpp"

namespace migplan {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

constexpr std::array<std::pair<std::string_view, std::int64_t>, 10> kUnits{{
    {"TiB", 1024 * kGiB},
    {"GiB", kGiB},
    {"MiB", kMiB},
    {"KiB", kKiB},
    {"TB", 1000 * kGB},
    {"GB", kGB},
    {"MB", kMB},
    {"KB", 1000},
    {"kB", 1000},
    {"B", 1},
}};

// Splits "46.5 GiB" into (46.5, 1<<30).
std::pair<double, std::int64_t> split_quantity(std::string_view text,
                                               std::string_view what) {
  const std::string_view original = text;
  text = trim(text);
  std::int64_t scale = 1;
  for (const auto& [suffix, factor] : kUnits) {
    if (text.size() > suffix.size() && text.ends_with(suffix)) {
      scale = factor;
      text.remove_suffix(suffix.size());
      break;
    }
  }
  text = trim(text);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value) ||
      value < 0.0) {
    throw Error(errc::kMalformedDocument,
                "cannot parse " + std::string(what) + " '" +
                    std::string(original) + "'");
  }
  return {value, scale};
}

std::string shortest_roundtrip(double value, auto&& parses_back) {
  char buf[64];
  for (int digits = 1; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    if (parses_back(buf)) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace

Bytes Bytes::from_gib(double gib) {
  return {std::llround(gib * static_cast<double>(kGiB))};
}

Bytes parse_bytes(std::string_view text) {
  auto [value, scale] = split_quantity(text, "byte quantity");
  return {std::llround(value * static_cast<double>(scale))};
}

Bandwidth parse_bandwidth(std::string_view text) {
  std::string_view body = trim(text);
  if (body.ends_with("/s")) body.remove_suffix(2);
  auto [value, scale] = split_quantity(body, "bandwidth");
  return {value * static_cast<double>(scale)};
}

std::string format_bytes(Bytes b) {
  const double gib = b.gib();
  std::string text = shortest_roundtrip(gib, [&](const char* s) {
    return parse_bytes(std::string(s) + "GiB") == b;
  });
  // Fall back to a plain byte count when the GiB form needs many digits.
  if (text.size() > 8) return std::to_string(b.count);
  return text + "GiB";
}

std::string format_bandwidth(Bandwidth bw) {
  return shortest_roundtrip(bw.gib_per_sec(), [&](const char* s) {
           return parse_bandwidth(std::string(s) + "GiB/s") == bw;
         }) +
         "GiB/s";
}

}  // namespace migplan

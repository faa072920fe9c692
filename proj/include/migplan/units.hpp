#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace migplan {

inline constexpr std::int64_t kKiB = 1024;
inline constexpr std::int64_t kMiB = 1024 * kKiB;
inline constexpr std::int64_t kGiB = 1024 * kMiB;
inline constexpr std::int64_t kMB = 1000 * 1000;
inline constexpr std::int64_t kGB = 1000 * kMB;

// Memory capacity. Stored as an exact byte count; GiB only appears at I/O.
struct Bytes {
  std::int64_t count = 0;

  constexpr auto operator<=>(const Bytes&) const = default;

  constexpr Bytes operator+(Bytes o) const { return {count + o.count}; }
  constexpr Bytes operator-(Bytes o) const { return {count - o.count}; }
  constexpr Bytes operator*(std::int64_t k) const { return {count * k}; }
  constexpr Bytes& operator+=(Bytes o) {
    count += o.count;
    return *this;
  }

  [[nodiscard]] constexpr double gib() const {
    return static_cast<double>(count) / static_cast<double>(kGiB);
  }
  [[nodiscard]] static Bytes from_gib(double gib);
  [[nodiscard]] static constexpr Bytes from_mb(std::int64_t mb) { return {mb * kMB}; }
};

// Transfer rate in bytes per second.
struct Bandwidth {
  double bytes_per_sec = 0.0;

  constexpr auto operator<=>(const Bandwidth&) const = default;

  [[nodiscard]] constexpr double gib_per_sec() const {
    return bytes_per_sec / static_cast<double>(kGiB);
  }
  [[nodiscard]] static constexpr Bandwidth from_gib_per_sec(double g) {
    return {g * static_cast<double>(kGiB)};
  }
};

// Accepts a bare integer byte count or a number with a unit suffix:
// B, KB, MB, GB, TB, KiB, MiB, GiB, TiB ("11GiB", "46.5 GiB", "60MB").
Bytes parse_bytes(std::string_view text);
// Same units followed by "/s" ("406GiB/s"), or a bare bytes/s number.
Bandwidth parse_bandwidth(std::string_view text);

// Shortest "<x>GiB" string that parses back to the same byte count, or the
// plain integer when no such form exists.
std::string format_bytes(Bytes b);
std::string format_bandwidth(Bandwidth bw);

}  // namespace migplan

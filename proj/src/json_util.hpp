#pragma once

// Typed field access for the catalog and workload documents. Every failure
// names the offending field path.

#include <cmath>
#include <string>
#include <string_view>

#include <json.hpp>

#include "migplan/error.hpp"
#include "migplan/units.hpp"

namespace migplan::detail {

using nlohmann::json;

inline std::string join_path(std::string_view path, std::string_view key) {
  return path.empty() ? std::string(key) : std::string(path) + "." + std::string(key);
}

inline const json& require(const json& obj, std::string_view key,
                           std::string_view path) {
  if (!obj.is_object()) {
    throw Error(errc::kMalformedDocument,
                "expected an object at '" + std::string(path) + "'");
  }
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    throw Error(errc::kMalformedDocument,
                "missing field '" + join_path(path, key) + "'");
  }
  return *it;
}

inline std::string get_string(const json& obj, std::string_view key,
                              std::string_view path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) {
    throw Error(errc::kMalformedDocument,
                "field '" + join_path(path, key) + "' must be a string");
  }
  return v.get<std::string>();
}

inline double get_number(const json& obj, std::string_view key,
                         std::string_view path) {
  const json& v = require(obj, key, path);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw Error(errc::kMalformedDocument,
                "field '" + join_path(path, key) + "' must be a finite number");
  }
  return v.get<double>();
}

inline int get_int(const json& obj, std::string_view key, std::string_view path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) {
    throw Error(errc::kMalformedDocument,
                "field '" + join_path(path, key) + "' must be an integer");
  }
  return v.get<int>();
}

inline Bytes get_bytes(const json& obj, std::string_view key, std::string_view path) {
  const json& v = require(obj, key, path);
  try {
    if (v.is_number_integer()) return Bytes{v.get<std::int64_t>()};
    if (v.is_string()) return parse_bytes(v.get<std::string>());
  } catch (const Error& e) {
    throw Error(errc::kMalformedDocument,
                "field '" + join_path(path, key) + "': " + e.what());
  }
  throw Error(errc::kMalformedDocument,
              "field '" + join_path(path, key) +
                  "' must be a byte count or a suffixed string");
}

inline Bandwidth get_bandwidth(const json& obj, std::string_view key,
                               std::string_view path) {
  const json& v = require(obj, key, path);
  try {
    if (v.is_number()) return Bandwidth{v.get<double>()};
    if (v.is_string()) return parse_bandwidth(v.get<std::string>());
  } catch (const Error& e) {
    throw Error(errc::kMalformedDocument,
                "field '" + join_path(path, key) + "': " + e.what());
  }
  throw Error(errc::kMalformedDocument,
              "field '" + join_path(path, key) +
                  "' must be a bytes/s number or a suffixed string");
}

}  // namespace migplan::detail

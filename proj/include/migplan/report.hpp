#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace migplan {

inline constexpr std::string_view kSchemaVersion = "1.0.0";

enum class Format { json, csv, table };

Format parse_format(std::string_view text);

// Six significant digits, "+inf"/"-inf" for infinities, "nan" for NaN.
std::string format_number(double v);

// Sorted keys, no whitespace, doubles through format_number. Non-finite
// doubles become strings so the output stays valid JSON.
std::string canonical_json(const nlohmann::json& value);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string render_csv(const Table& table);
// Columns padded to their widest cell, numbers right-aligned.
std::string render_table(const Table& table);

struct Report {
  std::string command;
  std::int64_t generated_at_epoch = 0;
  nlohmann::json payload = nlohmann::json::object();
  Table table{};  // flat view used by the csv and table formats
};

// "1970-01-01T00:00:00Z".
std::string iso8601_utc(std::int64_t epoch_seconds);

// json: the envelope {command, generated_at, payload, schema_version} plus a
// trailing newline. csv/table: the flat view only.
std::string render(const Report& report, Format format);

}  // namespace migplan

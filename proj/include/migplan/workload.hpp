#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "migplan/catalog.hpp"
#include "migplan/units.hpp"

namespace migplan {

inline constexpr std::string_view kFullConfig = "full";
inline constexpr std::string_view kTimeSliceConfig = "timeslice";
inline constexpr std::string_view kMpsPrefix = "mps:";

// Measurements for one workload on one configuration.
struct ConfigSample {
  double occupancy = 0.0;  // average SM occupancy, [0, 1]
  double rel_perf = 0.0;   // performance relative to the 1g.12gb profile
  double bw_util = 0.0;    // memory bandwidth utilisation, [0, 1]
  double power_w = 0.0;    // dynamic draw of one instance at the unthrottled clock

  bool operator==(const ConfigSample&) const = default;
};

enum class AccessMode { direct, copy_engine };

std::string_view to_string(AccessMode mode);
AccessMode parse_access_mode(std::string_view text);

// Per-workload overrides for the offload model.
struct OffloadHints {
  std::optional<AccessMode> access_mode;
  std::optional<double> hot_fraction;
  std::optional<double> perf_multiplier;  // measured value, bypasses the model

  bool operator==(const OffloadHints&) const = default;
};

struct WorkloadProfile {
  std::string name;
  std::string description;
  Bytes footprint;              // peak GPU memory use
  double runtime_full_s = 0.0;  // one run on the whole GPU at the unthrottled clock
  std::map<std::string, ConfigSample, std::less<>> per_config;
  std::set<std::string> pipelines;
  std::set<std::string> tags;
  OffloadHints offload;
  nlohmann::json annotations = nlohmann::json::object();

  [[nodiscard]] bool has(std::string_view config) const {
    return per_config.find(config) != per_config.end();
  }
  [[nodiscard]] bool has_tag(std::string_view tag) const {
    return tags.contains(std::string(tag));
  }
  // Throws Error(unknown-config).
  [[nodiscard]] const ConfigSample& sample(std::string_view config) const;

  bool operator==(const WorkloadProfile&) const = default;
  void validate() const;
};

// `doc` is an array of workload records, or an object with a "workloads" array.
std::vector<WorkloadProfile> load_profiles(const nlohmann::json& doc);
std::vector<WorkloadProfile> load_profiles_file(const std::filesystem::path& path);
nlohmann::json profiles_to_json(const std::vector<WorkloadProfile>& profiles);

// The shipped fixture set (fixtures/workloads.json, embedded at build time).
const std::vector<WorkloadProfile>& builtin_profiles();

// Throws Error(unknown-workload).
const WorkloadProfile& find_workload(const std::vector<WorkloadProfile>& profiles,
                                     std::string_view name);

// P / P_GPU: the config sample's rel_perf over the "full" sample's.
double relative_performance(const WorkloadProfile& profile, std::string_view config);

struct ScalingPoint {
  std::string config;
  int usable_sms = 0;
  double rel_perf = 0.0;
};

struct ScalingCurve {
  std::vector<ScalingPoint> points;  // strictly increasing usable_sms
  int baseline_sms = 16;             // SM count that ideal scaling normalises to

  [[nodiscard]] double ideal(int usable_sms) const {
    return static_cast<double>(usable_sms) / baseline_sms;
  }
  // max over points of (ideal - rel_perf) / ideal, floored at zero.
  [[nodiscard]] double deviation_from_ideal() const;
};

// Uses the MIG-profile samples only. Throws Error(invariant-violation) with
// fewer than two points.
ScalingCurve scaling_curve(const WorkloadProfile& profile, const Catalog& catalog);

}  // namespace migplan

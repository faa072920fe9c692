#pragma once

#include <compare>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "migplan/units.hpp"

namespace migplan {

struct Ratio {
  int num = 0;
  int den = 1;

  bool operator==(const Ratio&) const = default;
  [[nodiscard]] double value() const { return static_cast<double>(num) / den; }
  [[nodiscard]] std::string str() const;
  static Ratio parse(std::string_view text);
};

// Coherent CPU-GPU link bandwidths. Direct values are in-kernel access from
// the GPU; ce values are copy-engine transfers from a single 1g instance.
struct C2CLink {
  Bandwidth direct_d2h;
  Bandwidth direct_h2d;
  Bandwidth direct_bidir;
  Bandwidth ce_d2h_per_1g;
  Bandwidth ce_h2d_per_1g;

  bool operator==(const C2CLink&) const = default;
  void validate() const;
};

struct GpuSpec {
  std::string name;
  int total_sms = 0;
  int compute_slices = 0;  // also the instance limit
  int memory_slices = 0;
  Bytes usable_memory_full;
  Bytes nominal_memory;
  Bandwidth local_bandwidth_full;
  double power_cap_w = 0.0;
  double clock_max_mhz = 0.0;
  double clock_throttled_mhz = 0.0;
  C2CLink c2c_link;

  bool operator==(const GpuSpec&) const = default;
  void validate() const;
};

struct MigProfile {
  std::string name;
  int max_instances = 0;
  int usable_sms = 0;
  int compute_slice_count = 0;
  int memory_slice_count = 0;
  Bytes usable_memory;
  Ratio l2_fraction;
  int copy_engines = 0;
  Bandwidth local_bandwidth;
  std::string note;  // free-form annotation, no semantics

  bool operator==(const MigProfile&) const = default;
  void validate(const GpuSpec& gpu) const;
};

// An immutable, validated GPU description plus its slice profiles.
class Catalog {
 public:
  Catalog(GpuSpec gpu, std::vector<MigProfile> profiles);

  // The Grace Hopper H100 96GB catalog.
  static const Catalog& builtin();

  [[nodiscard]] const GpuSpec& gpu() const noexcept { return gpu_; }
  [[nodiscard]] const std::vector<MigProfile>& profiles() const noexcept {
    return profiles_;
  }
  [[nodiscard]] const MigProfile* find(std::string_view name) const;
  // Throws Error(unknown-profile).
  [[nodiscard]] const MigProfile& profile(std::string_view name) const;
  [[nodiscard]] Catalog restricted_to(const std::vector<std::string>& names) const;

  bool operator==(const Catalog&) const = default;

 private:
  GpuSpec gpu_;
  std::vector<MigProfile> profiles_;
};

Catalog load_catalog(const nlohmann::json& doc);
Catalog load_catalog_file(const std::filesystem::path& path);
nlohmann::json catalog_to_json(const Catalog& catalog);

struct PlanEntry {
  std::string profile;
  int count = 0;

  auto operator<=>(const PlanEntry&) const = default;
};

// A multiset of MIG profiles. Entries are kept sorted by profile name with
// duplicates merged, so equal multisets compare equal.
class PartitionPlan {
 public:
  PartitionPlan() = default;
  explicit PartitionPlan(std::vector<PlanEntry> entries);

  // "NxPROFILE[,NxPROFILE...]"; a bare profile name means a count of one.
  static PartitionPlan parse(std::string_view text);

  [[nodiscard]] const std::vector<PlanEntry>& entries() const noexcept {
    return entries_;
  }
  [[nodiscard]] int instance_count() const;
  // Profile name per instance, in entry order.
  [[nodiscard]] std::vector<std::string> instances() const;
  [[nodiscard]] std::string str() const;

  auto operator<=>(const PartitionPlan&) const = default;

 private:
  std::vector<PlanEntry> entries_;
};

struct PlanTotals {
  int compute_slices = 0;
  int memory_slices = 0;
  int usable_sms = 0;
  Bytes usable_memory;
};

// Throws Error(unknown-profile) for names missing from the catalog.
PlanTotals plan_totals(const PartitionPlan& plan, const Catalog& catalog);

struct Verdict {
  bool valid = false;
  std::vector<std::string> reasons;
};

Verdict validate_partition(const PartitionPlan& plan, const Catalog& catalog);

// Every non-empty valid plan, in lexicographic order of (name, count) entries.
std::vector<PartitionPlan> enumerate_partitions(const Catalog& catalog);

struct WasteReport {
  int wasted_sms = 0;
  double wasted_sm_fraction = 0.0;
  Bytes wasted_memory;
  double wasted_memory_fraction = 0.0;
};

// Throws Error(invalid-plan) with the violated constraints as reasons.
WasteReport plan_waste(const PartitionPlan& plan, const Catalog& catalog);

// Copies of one profile in the GPU-wide best case: as many as the memory
// slices admit, capped by the instance limit. This is the packing behind the
// vendor "wasted" column and may exceed compute-slice feasibility (four
// 2g.24gb instances need eight compute slices).
int best_case_instances(const MigProfile& profile, const GpuSpec& gpu);
WasteReport best_case_waste(const MigProfile& profile, const GpuSpec& gpu);

}  // namespace migplan

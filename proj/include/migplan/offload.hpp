#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "migplan/catalog.hpp"
#include "migplan/units.hpp"
#include "migplan/workload.hpp"

namespace migplan {

inline constexpr std::string_view kOffloadSuffix = "+offload";

std::string offload_config_name(std::string_view base_profile);
bool is_offload_config(std::string_view config);
// "1g.12gb+offload" -> "1g.12gb".
std::string_view offload_base_profile(std::string_view config);

// A workload running on an instance too small for it, with the excess kept
// in host memory and read over the coherent link.
struct OffloadScenario {
  std::string workload;
  MigProfile base;
  Bytes footprint;
  Bytes spill;
  double spill_fraction = 0.0;
  AccessMode access_mode = AccessMode::direct;
  double hot_fraction = 0.0;  // share of memory traffic hitting spilled data

  // Mode and hot fraction default to the workload's hints, then to direct
  // access and hot_fraction = spill_fraction. Throws Error(no-offload-needed)
  // when the footprint fits the instance.
  static OffloadScenario make(const WorkloadProfile& workload, const MigProfile& base,
                              std::optional<AccessMode> mode = std::nullopt,
                              std::optional<double> hot_fraction = std::nullopt);
};

struct OffloadEstimate {
  OffloadScenario scenario;
  Bandwidth effective_bandwidth;
  double perf_multiplier = 1.0;
  bool measured = false;  // perf_multiplier came from the workload, not the model
  std::string synthetic_config_name;
  double rel_perf = 0.0;   // 1g-normalised, base sample times perf_multiplier
  double occupancy = 0.0;  // base sample occupancy
};

// (footprint - instance_memory) / footprint. Throws Error(no-offload-needed)
// when nothing spills.
double spill_fraction(Bytes footprint, Bytes instance_memory);

// 1 / ((1 - h) / local + h / link): traffic split between local memory and
// the link, each served at its own rate.
Bandwidth harmonic_bandwidth(double hot_fraction, Bandwidth local, Bandwidth link);

// Link rate seen by the instance: direct in-kernel reads, or one copy engine.
Bandwidth link_bandwidth(AccessMode mode, const C2CLink& link);

Bandwidth effective_bandwidth(const OffloadScenario& scenario, const C2CLink& link,
                              const MigProfile& instance);

// Runtime split into a memory-bound share (bw_util) that slows with the
// bandwidth ratio and a compute share that does not. Capped at 1.
double bandwidth_bound_multiplier(double bw_util, double bandwidth_ratio);

// Throws Error(unknown-config) when the workload has no sample for the base
// profile.
OffloadEstimate degraded_performance(const WorkloadProfile& workload,
                                     const OffloadScenario& scenario, const C2CLink& link);

// Synthetic "<profile>+offload" candidates for profiles the footprint
// overflows, provided some larger profile holds it. By default only the
// largest undersized profile with a sample is offered.
std::vector<OffloadEstimate> offload_candidates(const WorkloadProfile& workload,
                                                const Catalog& catalog,
                                                bool all_undersized = false);

}  // namespace migplan

#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "migplan/catalog.hpp"
#include "migplan/units.hpp"
#include "migplan/workload.hpp"

namespace migplan {

struct MigScheme {
  PartitionPlan plan;
};

// SM shares of the whole GPU, one per process; memory bandwidth is pooled.
struct MpsScheme {
  std::vector<double> sm_fractions;
  Bandwidth shared_bandwidth;
};

// Round-robin on the whole GPU. Both defaults are model choices rather than
// measurements.
struct TimeSliceScheme {
  double quantum_s = 2e-3;
  double context_switch_cost_s = 0.2e-3;
};

using SharingScheme = std::variant<MigScheme, MpsScheme, TimeSliceScheme>;

// "mig:<plan>", "mps:<n>x<pct>[,<pct>...]" or "timeslice".
SharingScheme parse_scheme(std::string_view text, const Catalog& catalog,
                           const TimeSliceScheme& timeslice = {});
std::string scheme_name(const SharingScheme& scheme);
// Throws Error(invariant-violation).
void validate_scheme(const SharingScheme& scheme, const Catalog& catalog);

// One GPU-wide clock step when the summed draw would exceed the cap.
struct PowerModel {
  double cap_w = 700.0;
  double idle_w = 100.0;  // model default
  double clock_max_mhz = 1980.0;
  double clock_throttled_mhz = 1815.0;

  static PowerModel from_gpu(const GpuSpec& gpu);
  [[nodiscard]] double throttle_perf_factor() const { return clock_throttled_mhz / clock_max_mhz; }
  void validate() const;
};

struct SimOptions {
  double step_s = 1e-3;
  double timeline_interval_s = 20e-3;
  // Throughput lost to shared-cache conflicts when an MPS run falls back to
  // the 1g sample. Model default.
  double mps_interference = 0.10;
  // Lets MIG instances too small for the footprint run as offload configs.
  bool allow_offload = false;
};

struct CorunGroup {
  std::reference_wrapper<const WorkloadProfile> profile;
  int count = 1;
};

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const Interval&) const = default;
};

struct TimelineRow {
  double t_s = 0.0;
  double power_w = 0.0;
  double clock_mhz = 0.0;
  bool throttled = false;
  bool operator==(const TimelineRow&) const = default;
};

struct InstanceSummary {
  std::string workload;
  std::string config;
  double base_rate = 0.0;  // full-GPU seconds of work per second, unthrottled
  double power_draw_w = 0.0;
  Bytes context_memory_overhead;
  double finish_s = 0.0;
  bool operator==(const InstanceSummary&) const = default;
};

struct CorunReport {
  std::string scheme;
  double makespan_s = 0.0;
  double serial_makespan_s = 0.0;
  double throughput_ratio = 0.0;
  double energy_j = 0.0;
  double serial_energy_j = 0.0;
  double energy_ratio = 0.0;
  double idle_energy_j = 0.0;
  double dynamic_energy_j = 0.0;
  double peak_power_w = 0.0;
  double throttled_time_s = 0.0;
  std::vector<Interval> throttle_intervals;
  std::vector<TimelineRow> timeline;
  std::vector<InstanceSummary> instances;

  bool operator==(const CorunReport&) const = default;
};

// Fixed-step co-run of the given instances. The serial baseline runs every
// instance back to back on the whole GPU under the same power model.
// Throws Error(infeasible) for scheme/count mismatches and
// Error(memory-overflow) when a footprint plus context overhead does not fit.
CorunReport simulate_corun(std::span<const CorunGroup> workloads, const SharingScheme& scheme,
                           const Catalog& catalog, const PowerModel& power,
                           const SimOptions& options = {});

// Share of wall time each of n round-robin processes spends running.
double timeslice_rate_adjustment(double quantum_s, double context_switch_cost_s,
                                 int n_processes);

// Context memory for n processes: 60 MB each under MIG, 600 MB each under
// time-slicing, 600 MB in total under MPS.
Bytes context_memory_overhead(const SharingScheme& scheme, int n_processes);

// Grants equal demands when they fit, otherwise scales every demand by the
// same factor so the total equals the shared bandwidth.
std::vector<Bandwidth> mps_bandwidth_share(std::span<const Bandwidth> demands,
                                           Bandwidth shared_bandwidth);

struct EnergySummary {
  double energy_ratio = 0.0;
  double energy_j = 0.0;
  double serial_energy_j = 0.0;
  double idle_energy_j = 0.0;
  double dynamic_energy_j = 0.0;
};

EnergySummary energy_report(const CorunReport& report);

}  // namespace migplan

#include "migplan/offload.hpp"

#include <algorithm>

#include "migplan/error.hpp"

namespace migplan {

std::string offload_config_name(std::string_view base_profile) {
  return std::string(base_profile) + std::string(kOffloadSuffix);
}

bool is_offload_config(std::string_view config) {
  return config.size() > kOffloadSuffix.size() && config.ends_with(kOffloadSuffix);
}

std::string_view offload_base_profile(std::string_view config) {
  if (!is_offload_config(config)) return config;
  return config.substr(0, config.size() - kOffloadSuffix.size());
}

double spill_fraction(Bytes footprint, Bytes instance_memory) {
  if (footprint <= instance_memory) {
    throw Error(errc::kNoOffload, "footprint " + format_bytes(footprint) +
                                      " fits in " + format_bytes(instance_memory) +
                                      "; use the plain profile");
  }
  return static_cast<double>((footprint - instance_memory).count) /
         static_cast<double>(footprint.count);
}

OffloadScenario OffloadScenario::make(const WorkloadProfile& workload, const MigProfile& base,
                                      std::optional<AccessMode> mode,
                                      std::optional<double> hot_fraction) {
  OffloadScenario s;
  s.workload = workload.name;
  s.base = base;
  s.footprint = workload.footprint;
  s.spill_fraction = migplan::spill_fraction(workload.footprint, base.usable_memory);
  s.spill = workload.footprint - base.usable_memory;
  s.access_mode = mode.value_or(workload.offload.access_mode.value_or(AccessMode::direct));
  s.hot_fraction = hot_fraction.value_or(workload.offload.hot_fraction.value_or(s.spill_fraction));
  if (!(s.hot_fraction >= 0.0 && s.hot_fraction <= 1.0)) {
    throw Error(errc::kOutOfRange, "hot fraction must lie in [0, 1]");
  }
  return s;
}

Bandwidth harmonic_bandwidth(double hot_fraction, Bandwidth local, Bandwidth link) {
  const double h = hot_fraction;
  if (h <= 0.0) return local;
  if (h >= 1.0) return link;
  return {1.0 / ((1.0 - h) / local.bytes_per_sec + h / link.bytes_per_sec)};
}

Bandwidth link_bandwidth(AccessMode mode, const C2CLink& link) {
  // Copy-engine bandwidth does not grow with instance size, so the per-1g
  // figure applies to every profile.
  return mode == AccessMode::direct ? link.direct_d2h : link.ce_d2h_per_1g;
}

Bandwidth effective_bandwidth(const OffloadScenario& scenario, const C2CLink& link,
                              const MigProfile& instance) {
  return harmonic_bandwidth(scenario.hot_fraction, instance.local_bandwidth,
                            link_bandwidth(scenario.access_mode, link));
}

double bandwidth_bound_multiplier(double bw_util, double bandwidth_ratio) {
  return std::min(1.0, bw_util * bandwidth_ratio + (1.0 - bw_util));
}

OffloadEstimate degraded_performance(const WorkloadProfile& workload,
                                     const OffloadScenario& scenario, const C2CLink& link) {
  const ConfigSample& base = workload.sample(scenario.base.name);
  OffloadEstimate e;
  e.scenario = scenario;
  e.synthetic_config_name = offload_config_name(scenario.base.name);
  const Bandwidth local = scenario.base.local_bandwidth;
  e.effective_bandwidth =
      std::min(local, effective_bandwidth(scenario, link, scenario.base));
  if (workload.offload.perf_multiplier) {
    e.perf_multiplier = *workload.offload.perf_multiplier;
    e.measured = true;
  } else {
    e.perf_multiplier = bandwidth_bound_multiplier(
        base.bw_util, e.effective_bandwidth.bytes_per_sec / local.bytes_per_sec);
  }
  e.rel_perf = base.rel_perf * e.perf_multiplier;
  e.occupancy = base.occupancy;
  return e;
}

std::vector<OffloadEstimate> offload_candidates(const WorkloadProfile& workload,
                                                const Catalog& catalog, bool all_undersized) {
  const auto& profiles = catalog.profiles();
  const bool fits_somewhere = std::any_of(profiles.begin(), profiles.end(), [&](const auto& p) {
    return workload.footprint <= p.usable_memory;
  });
  if (!fits_somewhere) return {};

  std::vector<const MigProfile*> undersized;
  for (const auto& p : profiles) {
    if (workload.footprint > p.usable_memory && workload.has(p.name)) undersized.push_back(&p);
  }
  // Largest memory first; among equals the smaller instance.
  std::sort(undersized.begin(), undersized.end(), [](const MigProfile* a, const MigProfile* b) {
    if (a->usable_memory != b->usable_memory) return a->usable_memory > b->usable_memory;
    if (a->usable_sms != b->usable_sms) return a->usable_sms < b->usable_sms;
    return a->name < b->name;
  });
  if (!all_undersized && undersized.size() > 1) undersized.resize(1);

  std::vector<OffloadEstimate> out;
  for (const MigProfile* p : undersized) {
    out.push_back(degraded_performance(workload, OffloadScenario::make(workload, *p),
                                       catalog.gpu().c2c_link));
  }
  std::sort(out.begin(), out.end(), [](const OffloadEstimate& a, const OffloadEstimate& b) {
    return a.synthetic_config_name < b.synthetic_config_name;
  });
  return out;
}

}  // namespace migplan

#include "migplan/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "migplan/error.hpp"
#include "migplan/offload.hpp"

namespace migplan {
namespace {

Candidate plain_candidate(const WorkloadProfile& profile, std::string_view config,
                          const Catalog& catalog) {
  const GpuSpec& gpu = catalog.gpu();
  Candidate c;
  c.config = std::string(config);
  if (config == kFullConfig) {
    c.usable_sms = gpu.total_sms;
    c.usable_memory = gpu.usable_memory_full;
  } else {
    const MigProfile* p = catalog.find(config);
    if (p == nullptr) {
      throw Error(errc::kUnknownConfig,
                  "'" + std::string(config) + "' is not a MIG profile or 'full'");
    }
    c.usable_sms = p->usable_sms;
    c.usable_memory = p->usable_memory;
  }
  const ConfigSample& s = profile.sample(config);
  c.occupancy = s.occupancy;
  c.rel_perf = relative_performance(profile, config);
  return c;
}

Candidate offload_candidate(const WorkloadProfile& profile, const OffloadEstimate& e) {
  return Candidate{
      .config = e.synthetic_config_name,
      .usable_sms = e.scenario.base.usable_sms,
      .usable_memory = e.scenario.base.usable_memory,
      .occupancy = e.occupancy,
      .rel_perf = e.rel_perf / profile.sample(kFullConfig).rel_perf,
      .offload = true,
  };
}

}  // namespace

RewardPolicy RewardPolicy::make(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw Error(errc::kOutOfRange, "alpha must be a finite value >= 0");
  }
  return RewardPolicy{alpha};
}

double sm_waste(int usable_sms, int total_sms, double occupancy) {
  if (usable_sms <= 0 || usable_sms > total_sms) {
    throw Error(errc::kOutOfRange, "usable SMs must lie in (0, total SMs]");
  }
  if (!(occupancy >= 0.0 && occupancy <= 1.0)) {
    throw Error(errc::kOutOfRange, "occupancy must lie in [0, 1]");
  }
  return static_cast<double>(usable_sms) / total_sms * (1.0 - occupancy);
}

double mem_waste(Bytes instance_memory, Bytes footprint, Bytes gpu_memory) {
  const std::int64_t unused = std::max<std::int64_t>(0, (instance_memory - footprint).count);
  return static_cast<double>(unused) / static_cast<double>(gpu_memory.count);
}

std::vector<Candidate> reward_candidates(const WorkloadProfile& profile, const Catalog& catalog,
                                         bool include_offload) {
  std::vector<Candidate> out;
  for (const auto& [config, sample] : profile.per_config) {
    if (config != kFullConfig && catalog.find(config) == nullptr) continue;
    Candidate c = plain_candidate(profile, config, catalog);
    if (profile.footprint <= c.usable_memory) out.push_back(std::move(c));
  }
  if (include_offload) {
    for (const auto& e : offload_candidates(profile, catalog)) {
      out.push_back(offload_candidate(profile, e));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.config < b.config; });
  return out;
}

RewardResult score(const Candidate& candidate, const WorkloadProfile& profile,
                   const RewardPolicy& policy, const GpuSpec& gpu) {
  RewardResult r;
  r.config = candidate.config;
  r.usable_sms = candidate.usable_sms;
  r.usable_memory = candidate.usable_memory;
  r.offload = candidate.offload;
  r.rel_perf = candidate.rel_perf;
  r.w_sm = sm_waste(candidate.usable_sms, gpu.total_sms, candidate.occupancy);
  // An offloaded instance has all of its memory in use.
  r.w_mem = candidate.offload
                ? 0.0
                : mem_waste(candidate.usable_memory, profile.footprint, gpu.usable_memory_full);
  const double denom = policy.alpha + r.w_mem + r.w_sm;
  if (denom > 0.0) {
    r.reward = r.rel_perf / denom;
  } else {
    r.unbounded = true;
    r.reward = std::numeric_limits<double>::infinity();
  }
  return r;
}

RewardResult reward(const WorkloadProfile& profile, std::string_view config,
                    const RewardPolicy& policy, const Catalog& catalog) {
  if (is_offload_config(config)) {
    const MigProfile& base = catalog.profile(offload_base_profile(config));
    const auto estimate = degraded_performance(
        profile, OffloadScenario::make(profile, base), catalog.gpu().c2c_link);
    return score(offload_candidate(profile, estimate), profile, policy, catalog.gpu());
  }
  Candidate c = plain_candidate(profile, config, catalog);
  if (profile.footprint > c.usable_memory) {
    throw Error(errc::kMemoryOverflow, "workload '" + profile.name + "' (" +
                                           format_bytes(profile.footprint) + ") exceeds " +
                                           c.config + " memory (" +
                                           format_bytes(c.usable_memory) + ")");
  }
  return score(c, profile, policy, catalog.gpu());
}

bool ranks_before(const RewardResult& a, const RewardResult& b) {
  if (a.unbounded != b.unbounded) return a.unbounded;
  if (!a.unbounded && a.reward != b.reward) return a.reward > b.reward;
  if (a.usable_sms != b.usable_sms) return a.usable_sms < b.usable_sms;
  if (a.usable_memory != b.usable_memory) return a.usable_memory < b.usable_memory;
  return a.config < b.config;
}

std::vector<RewardResult> recommend(const WorkloadProfile& profile, const RewardPolicy& policy,
                                    const Catalog& catalog, bool include_offload) {
  const auto candidates = reward_candidates(profile, catalog, include_offload);
  if (candidates.empty()) {
    throw Error(errc::kInfeasible, "no configuration holds workload '" + profile.name + "' (" +
                                       format_bytes(profile.footprint) + ")" +
                                       (include_offload ? "" : "; offloading is disabled"));
  }
  std::vector<RewardResult> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) ranked.push_back(score(c, profile, policy, catalog.gpu()));
  std::sort(ranked.begin(), ranked.end(), ranks_before);
  return ranked;
}

std::vector<SweepRow> alpha_sweep(const WorkloadProfile& profile, std::span<const double> alphas,
                                  const Catalog& catalog, bool include_offload) {
  if (alphas.empty()) throw Error(errc::kOutOfRange, "alpha list is empty");
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    rows.push_back({a, recommend(profile, RewardPolicy::make(a), catalog, include_offload)});
  }
  return rows;
}

double reward_crossover(const Candidate& a, const Candidate& b, const WorkloadProfile& profile,
                        const GpuSpec& gpu) {
  const RewardPolicy zero{};
  const RewardResult ra = score(a, profile, zero, gpu);
  const RewardResult rb = score(b, profile, zero, gpu);
  const double wa = ra.w_sm + ra.w_mem;
  const double wb = rb.w_sm + rb.w_mem;
  if (ra.rel_perf == rb.rel_perf) return -1.0;
  const double alpha = (ra.rel_perf * wb - rb.rel_perf * wa) / (rb.rel_perf - ra.rel_perf);
  return alpha >= 0.0 ? alpha : -1.0;
}

}  // namespace migplan

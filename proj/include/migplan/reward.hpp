#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "migplan/catalog.hpp"
#include "migplan/workload.hpp"

namespace migplan {

// alpha = 0 ranks purely by utilisation; larger values weigh performance.
struct RewardPolicy {
  double alpha = 0.0;

  // Throws Error(out-of-range) for negative or non-finite alpha.
  static RewardPolicy make(double alpha);
  // Values above 1 are allowed but lie outside the scale of the waste terms.
  [[nodiscard]] bool outside_default_range() const { return alpha > 1.0; }
};

struct RewardResult {
  std::string config;
  int usable_sms = 0;
  Bytes usable_memory{};
  double w_sm = 0.0;
  double w_mem = 0.0;
  double rel_perf = 0.0;  // P / P_GPU
  double reward = 0.0;    // meaningless when unbounded
  bool unbounded = false; // zero denominator, ranks above every finite reward
  bool offload = false;
};

// (usable_sms / total_sms) * (1 - occupancy).
double sm_waste(int usable_sms, int total_sms, double occupancy);
// max(0, instance - footprint) / gpu_memory.
double mem_waste(Bytes instance_memory, Bytes footprint, Bytes gpu_memory);

// One configuration a workload could be placed on, with the inputs the
// reward needs. Plain MIG profiles, the whole GPU ("full"), or a synthetic
// offload config.
struct Candidate {
  std::string config;
  int usable_sms = 0;
  Bytes usable_memory{};
  double occupancy = 0.0;
  double rel_perf = 0.0;  // P / P_GPU
  bool offload = false;
};

// Every sampled MIG profile and "full" that holds the footprint, plus offload
// candidates when enabled. Sorted by config name.
std::vector<Candidate> reward_candidates(const WorkloadProfile& profile, const Catalog& catalog,
                                         bool include_offload);

RewardResult score(const Candidate& candidate, const WorkloadProfile& profile,
                   const RewardPolicy& policy, const GpuSpec& gpu);

// Throws Error(unknown-config) for configs without a sample, and
// Error(memory-overflow) when a plain config cannot hold the footprint.
RewardResult reward(const WorkloadProfile& profile, std::string_view config,
                    const RewardPolicy& policy, const Catalog& catalog);

// Strict weak order used by recommend: unbounded first, then reward
// descending, then fewer SMs, less memory, and name.
bool ranks_before(const RewardResult& a, const RewardResult& b);

// Ranked results, best first. Throws Error(infeasible) when nothing fits.
std::vector<RewardResult> recommend(const WorkloadProfile& profile, const RewardPolicy& policy,
                                    const Catalog& catalog, bool include_offload);

struct SweepRow {
  double alpha = 0.0;
  std::vector<RewardResult> ranked;
};

inline constexpr double kDefaultAlphas[] = {0.0, 0.1, 0.5, 1.0};

std::vector<SweepRow> alpha_sweep(const WorkloadProfile& profile, std::span<const double> alphas,
                                  const Catalog& catalog, bool include_offload);

// The alpha where candidates a and b earn equal reward, or a negative value
// when their rewards never cross for alpha >= 0.
double reward_crossover(const Candidate& a, const Candidate& b, const WorkloadProfile& profile,
                        const GpuSpec& gpu);

}  // namespace migplan

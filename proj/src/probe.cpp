#include "migplan/probe.hpp"

#include <algorithm>
#include <cmath>

#include "migplan/error.hpp"

namespace migplan {

SimulatedDevice::SimulatedDevice(int n_sm, double delta_t_s, double noise_fraction,
                                 std::uint64_t seed, int max_probe_blocks)
    : n_sm_(n_sm),
      delta_t_(delta_t_s),
      noise_(noise_fraction),
      max_blocks_(max_probe_blocks > 0 ? max_probe_blocks : 2 * n_sm + 2),
      rng_(seed) {
  if (n_sm <= 0) {
    throw Error(errc::kInvariant,
                "simulated device needs a positive SM count, got " + std::to_string(n_sm));
  }
  if (!(delta_t_s > 0.0)) throw Error(errc::kInvariant, "delta_t must be positive");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) {
    throw Error(errc::kInvariant, "noise fraction must lie in [0, 1)");
  }
}

double SimulatedDevice::launch(int block_count) {
  if (block_count < 1) throw Error(errc::kOutOfRange, "launch needs at least one block");
  const int waves = (block_count + n_sm_ - 1) / n_sm_;
  double elapsed = waves * delta_t_;
  if (noise_ > 0.0) {
    std::uniform_real_distribution<double> jitter(-noise_, noise_);
    elapsed *= 1.0 + jitter(rng_);
  }
  return elapsed;
}

namespace {

double median_elapsed(DeviceOracle& device, int blocks, int repeats) {
  std::vector<double> samples(static_cast<std::size_t>(std::max(1, repeats)));
  for (auto& s : samples) s = device.launch(blocks);
  auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  return *mid;
}

}  // namespace

int probe_sm_count(DeviceOracle& device, const ProbeOptions& options) {
  const double base = median_elapsed(device, 1, options.repeats);
  if (!(base > 0.0)) throw Error(errc::kInvariant, "device reported a non-positive runtime");
  const double threshold = options.doubling_ratio * base;
  for (int n = 2; n <= device.max_probe_blocks(); ++n) {
    if (median_elapsed(device, n, options.repeats) >= threshold) return n - 1;
  }
  throw Error(errc::kProbeBudget,
              "device larger than probe budget (" +
                  std::to_string(device.max_probe_blocks()) + " blocks)");
}

std::vector<ProbeRow> probe_all_profiles(const Catalog& catalog, double delta_t_s) {
  std::vector<ProbeRow> rows;
  for (const auto& p : catalog.profiles()) {
    SimulatedDevice device(p.usable_sms, delta_t_s);
    const int probed = probe_sm_count(device);
    rows.push_back({p.name, probed, p.usable_sms, probed == p.usable_sms});
  }
  return rows;
}

}  // namespace migplan

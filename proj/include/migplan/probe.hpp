#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "migplan/catalog.hpp"

namespace migplan {

// Something that can run the probe kernel with a given number of thread
// blocks, one block saturating one SM, and report the elapsed time.
class DeviceOracle {
 public:
  virtual ~DeviceOracle() = default;
  virtual double launch(int block_count) = 0;
  [[nodiscard]] virtual int max_probe_blocks() const = 0;
};

// elapsed(n) = ceil(n / n_sm) * delta_t, optionally perturbed by a uniform
// factor in [1 - noise, 1 + noise] drawn from a seeded generator.
class SimulatedDevice final : public DeviceOracle {
 public:
  SimulatedDevice(int n_sm, double delta_t_s, double noise_fraction = 0.0,
                  std::uint64_t seed = 0x5eed, int max_probe_blocks = 0);

  double launch(int block_count) override;
  [[nodiscard]] int max_probe_blocks() const override { return max_blocks_; }
  [[nodiscard]] int n_sm() const noexcept { return n_sm_; }

 private:
  int n_sm_;
  double delta_t_;
  double noise_;
  int max_blocks_;
  std::mt19937_64 rng_;
};

struct ProbeOptions {
  int repeats = 5;               // median over this many launches per point
  double doubling_ratio = 1.5;   // elapsed(n) / elapsed(1) that counts as a second wave
};

// Linear scan n = 1, 2, ... until the runtime jumps to a second wave; the SM
// count is one less than that n. Throws Error(probe-budget) when no jump is
// seen within max_probe_blocks.
int probe_sm_count(DeviceOracle& device, const ProbeOptions& options = {});

struct ProbeRow {
  std::string profile;
  int probed_sms = 0;
  int catalog_sms = 0;
  bool match = false;
};

// One noiseless simulated device per profile, probed and compared against
// the catalog SM count.
std::vector<ProbeRow> probe_all_profiles(const Catalog& catalog, double delta_t_s = 0.01);

}  // namespace migplan

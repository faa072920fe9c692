#include <doctest.h>

#include "migplan/catalog.hpp"
#include "migplan/error.hpp"
#include "migplan/probe.hpp"

using namespace migplan;

TEST_CASE("elapsed is a step function of waves") {
  SimulatedDevice d(16, 0.01);
  CHECK(d.launch(1) == doctest::Approx(0.01));
  CHECK(d.launch(16) == doctest::Approx(0.01));
  CHECK(d.launch(17) == doctest::Approx(0.02));
  CHECK(d.launch(33) == doctest::Approx(0.03));
}

TEST_CASE("noiseless probe is exact for every SM count up to 256") {
  for (int n = 1; n <= 256; ++n) {
    SimulatedDevice d(n, 0.005);
    CAPTURE(n);
    CHECK(probe_sm_count(d) == n);
  }
}

TEST_CASE("median of five survives 10% noise") {
  for (int n : {16, 26, 32, 60, 64, 132}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      SimulatedDevice d(n, 0.01, 0.10, seed);
      CAPTURE(n);
      CAPTURE(seed);
      CHECK(probe_sm_count(d) == n);
    }
  }
}

TEST_CASE("probe over the catalog") {
  for (const auto& row : probe_all_profiles(Catalog::builtin())) {
    CAPTURE(row.profile);
    CHECK(row.match);
    CHECK(row.probed_sms == row.catalog_sms);
  }
}

namespace {

// Never shows a second wave.
class FlatDevice final : public DeviceOracle {
 public:
  double launch(int) override { return 1.0; }
  [[nodiscard]] int max_probe_blocks() const override { return 64; }
};

}  // namespace

TEST_CASE("probe budget") {
  FlatDevice d;
  try {
    (void)probe_sm_count(d);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::kProbeBudget);
  }
}

TEST_CASE("bad devices") {
  CHECK_THROWS_AS(SimulatedDevice(0, 0.01), Error);
  CHECK_THROWS_AS(SimulatedDevice(16, 0.0), Error);
  CHECK_THROWS_AS(SimulatedDevice(16, 0.01, 1.5), Error);
}

TEST_CASE("same seed, same timings") {
  SimulatedDevice a(60, 0.01, 0.1, 99), b(60, 0.01, 0.1, 99);
  for (int i = 1; i < 100; ++i) CHECK(a.launch(i) == b.launch(i));
}

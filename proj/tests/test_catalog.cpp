#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "generators.hpp"
#include "migplan/catalog.hpp"
#include "migplan/error.hpp"

using namespace migplan;

namespace {

const Catalog& hw() { return Catalog::builtin(); }

}  // namespace

TEST_CASE("built-in profile table") {
  struct Row {
    const char* name;
    int max_inst, sms, cs, ms;
    double mem_gib;
    const char* l2;
    int ce;
    double bw;
  };
  const Row rows[] = {
      {"1g.12gb", 7, 16, 1, 1, 11, "1/8", 1, 406},
      {"1g.24gb", 4, 26, 1, 2, 23, "2/8", 2, 812},
      {"2g.24gb", 3, 32, 2, 2, 23, "2/8", 2, 812},
      {"3g.48gb", 2, 60, 3, 4, 46.5, "4/8", 3, 1611},
      {"4g.48gb", 1, 64, 4, 4, 46.5, "4/8", 4, 1635},
      {"7g.96gb", 1, 132, 7, 8, 94.5, "8/8", 8, 3175},
  };
  REQUIRE(hw().profiles().size() == 6);
  for (const auto& r : rows) {
    CAPTURE(r.name);
    const MigProfile& p = hw().profile(r.name);
    CHECK(p.max_instances == r.max_inst);
    CHECK(p.usable_sms == r.sms);
    CHECK(p.compute_slice_count == r.cs);
    CHECK(p.memory_slice_count == r.ms);
    CHECK(p.usable_memory == Bytes::from_gib(r.mem_gib));
    CHECK(p.l2_fraction.str() == r.l2);
    CHECK(p.copy_engines == r.ce);
    CHECK(p.local_bandwidth.gib_per_sec() == doctest::Approx(r.bw));
  }
  const GpuSpec& g = hw().gpu();
  CHECK(g.total_sms == 132);
  CHECK(g.compute_slices == 7);
  CHECK(g.memory_slices == 8);
  CHECK(g.usable_memory_full == Bytes::from_gib(94.5));
  CHECK(g.nominal_memory == Bytes::from_gib(96));
  CHECK(g.power_cap_w == 700);
  CHECK(g.clock_max_mhz == 1980);
  CHECK(g.clock_throttled_mhz == 1815);
  CHECK(g.c2c_link.direct_d2h.gib_per_sec() == doctest::Approx(336));
  CHECK(g.c2c_link.ce_d2h_per_1g.gib_per_sec() == doctest::Approx(39.6));
}

TEST_CASE("unknown profile") {
  CHECK(hw().find("5g.60gb") == nullptr);
  try {
    (void)hw().profile("5g.60gb");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::kUnknownProfile);
  }
}

TEST_CASE("best-case waste per profile") {
  struct Expect {
    const char* name;
    int sms;
    double pct;
    double mem_gib;
  };
  const Expect rows[] = {
      {"1g.12gb", 20, 15.2, 17.5}, {"1g.24gb", 28, 21.2, 2.5}, {"2g.24gb", 4, 3.0, 2.5},
      {"3g.48gb", 12, 9.1, 1.5},   {"4g.48gb", 4, 3.0, 1.5},   {"7g.96gb", 0, 0.0, 0.0},
  };
  for (const auto& r : rows) {
    CAPTURE(r.name);
    const WasteReport w = best_case_waste(hw().profile(r.name), hw().gpu());
    CHECK(w.wasted_sms == r.sms);
    CHECK(100.0 * w.wasted_sm_fraction == doctest::Approx(r.pct).epsilon(0.01));
    CHECK(w.wasted_memory == Bytes::from_gib(r.mem_gib));
  }
  CHECK(best_case_instances(hw().profile("2g.24gb"), hw().gpu()) == 4);
  CHECK(best_case_instances(hw().profile("1g.12gb"), hw().gpu()) == 7);
}

TEST_CASE("plan parsing and normal form") {
  const auto a = PartitionPlan::parse("4g.48gb,3x1g.12gb");
  const auto b = PartitionPlan::parse("1x1g.12gb,4g.48gb,2x1g.12gb");
  CHECK(a == b);
  CHECK(a.str() == "3x1g.12gb,1x4g.48gb");
  CHECK(a.instance_count() == 4);
  CHECK(a.instances() == std::vector<std::string>{"1g.12gb", "1g.12gb", "1g.12gb", "4g.48gb"});
  CHECK_THROWS_AS(PartitionPlan::parse(""), Error);
  CHECK_THROWS_AS(PartitionPlan::parse("1g.12gb,,2g.24gb"), Error);
}

TEST_CASE("plan validation lists every violation") {
  const Verdict v = validate_partition(PartitionPlan::parse("2x4g.48gb"), hw());
  CHECK_FALSE(v.valid);
  REQUIRE(v.reasons.size() == 2);
  CHECK(v.reasons[0].find("max_instances") != std::string::npos);
  CHECK(v.reasons[1].find("compute slices 8") != std::string::npos);

  CHECK(validate_partition(PartitionPlan::parse("7x1g.12gb"), hw()).valid);
  CHECK(validate_partition(PartitionPlan::parse("4g.48gb,3x1g.12gb"), hw()).valid);
  CHECK_FALSE(validate_partition(PartitionPlan::parse("4x2g.24gb"), hw()).valid);
  CHECK_FALSE(validate_partition(PartitionPlan::parse("3g.48gb,4g.48gb,1g.24gb"), hw()).valid);
}

TEST_CASE("plan waste") {
  const WasteReport w = plan_waste(PartitionPlan::parse("7x1g.12gb"), hw());
  CHECK(w.wasted_sms == 20);
  CHECK(w.wasted_memory == Bytes::from_gib(17.5));
  CHECK(w.wasted_memory_fraction == doctest::Approx(17.5 / 94.5));
  try {
    (void)plan_waste(PartitionPlan::parse("8x1g.12gb"), hw());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::kInvalidPlan);
    CHECK_FALSE(e.reasons().empty());
  }
}

// Every multiset with counts up to max_instances, checked by brute force.
TEST_CASE("enumeration equals brute-force filter") {
  const auto& ps = hw().profiles();
  std::set<std::string> brute;
  std::vector<int> k(ps.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == ps.size()) {
      std::vector<PlanEntry> e;
      for (std::size_t j = 0; j < ps.size(); ++j) {
        if (k[j] > 0) e.push_back({ps[j].name, k[j]});
      }
      if (e.empty()) return;
      PartitionPlan plan(e);
      if (validate_partition(plan, hw()).valid) brute.insert(plan.str());
      return;
    }
    for (k[i] = 0; k[i] <= ps[i].max_instances; ++k[i]) rec(i + 1);
  };
  rec(0);

  const auto plans = enumerate_partitions(hw());
  std::set<std::string> listed;
  for (const auto& p : plans) listed.insert(p.str());
  CHECK(listed.size() == plans.size());
  CHECK(listed == brute);
  CHECK(std::is_sorted(plans.begin(), plans.end()));
  for (const auto& p : plans) {
    const WasteReport w = plan_waste(p, hw());
    CHECK(w.wasted_sms >= 0);
    CHECK(w.wasted_memory >= Bytes{});
  }
}

TEST_CASE("random plans: validity matches slice arithmetic") {
  testgen::Gen g(7);
  const auto& ps = hw().profiles();
  for (int i = 0; i < 500; ++i) {
    std::vector<PlanEntry> e;
    const int n = g.integer(1, 4);
    for (int j = 0; j < n; ++j) {
      e.push_back({ps[static_cast<std::size_t>(g.integer(0, 5))].name, g.integer(1, 5)});
    }
    PartitionPlan plan(e);
    const PlanTotals t = plan_totals(plan, hw());
    bool ok = t.compute_slices <= 7 && t.memory_slices <= 8;
    for (const auto& pe : plan.entries()) ok = ok && pe.count <= hw().profile(pe.profile).max_instances;
    CAPTURE(plan.str());
    CHECK(validate_partition(plan, hw()).valid == ok);
    CHECK(PartitionPlan::parse(plan.str()) == plan);
  }
}

TEST_CASE("catalog JSON round trip") {
  const auto doc = catalog_to_json(hw());
  const Catalog again = load_catalog(doc);
  CHECK(again == hw());
  CHECK(catalog_to_json(again) == doc);
}

TEST_CASE("catalog invariants are enforced on load") {
  auto doc = catalog_to_json(hw());
  SUBCASE("usable_sms above total") { doc["profiles"][0]["usable_sms"] = 500; }
  SUBCASE("instance limit inconsistent with slices") { doc["profiles"][2]["max_instances"] = 4; }
  SUBCASE("throttled clock above max") { doc["gpu"]["clock_throttled"] = 2500; }
  SUBCASE("usable above nominal") { doc["gpu"]["usable_memory_full"] = "100GiB"; }
  try {
    (void)load_catalog(doc);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::kInvariant);
  }
}

TEST_CASE("malformed catalog names the field") {
  auto doc = catalog_to_json(hw());
  doc["profiles"][1].erase("usable_memory");
  try {
    (void)load_catalog(doc);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == errc::kMalformedDocument);
    CHECK(std::string(e.what()).find("usable_memory") != std::string::npos);
  }
}

TEST_CASE("restricted catalog") {
  const Catalog small = hw().restricted_to({"1g.12gb", "7g.96gb"});
  CHECK(small.profiles().size() == 2);
  CHECK(small.find("2g.24gb") == nullptr);
  CHECK_THROWS_AS((void)hw().restricted_to({"nope"}), Error);
}

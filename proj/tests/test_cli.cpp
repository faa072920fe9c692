#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "migplan/catalog.hpp"
#include "migplan/cli.hpp"

using namespace migplan;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "migplan-cli-test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("catalog table lists six profiles") {
  const auto r = cli({"catalog", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 7);
  CHECK(r.out.find("\n1g.12gb,7,16,1,1,11GiB,1/8,1,406GiB/s,20,15.1515,17.5GiB\n") != std::string::npos);
}

TEST_CASE("catalog dump reloads") {
  const auto path = scratch("catalog.json");
  REQUIRE(cli({"catalog", "--dump", "--output", path.string()}).code == 0);
  CHECK(load_catalog_file(path) == Catalog::builtin());
  const auto r = cli({"--catalog", path.string(), "catalog", "--format", "csv"});
  CHECK(r.code == 0);
}

TEST_CASE("catalog path from the environment") {
  ::setenv("MIG_PLANNER_CATALOG", "/nonexistent/catalog.json", 1);
  const auto r = cli({"catalog"});
  ::unsetenv("MIG_PLANNER_CATALOG");
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"]["kind"] == "io");
}

TEST_CASE("validate") {
  const auto ok = cli({"validate", "--plan", "4g.48gb,3x1g.12gb", "--generated-at-epoch", "0"});
  REQUIRE(ok.code == 0);
  const auto doc = json::parse(ok.out);
  CHECK(doc["payload"]["valid"] == true);
  CHECK(doc["payload"]["plan"] == "3x1g.12gb,1x4g.48gb");

  const auto bad = cli({"validate", "--plan", "2x4g.48gb"});
  CHECK(bad.code == 1);
  CHECK(bad.out.empty());
  const auto err = json::parse(bad.err);
  CHECK(err["error"]["kind"] == "invalid-plan");
  CHECK(err["error"]["reasons"][0].get<std::string>().find("max_instances") != std::string::npos);

  CHECK(cli({"validate"}).code == 2);
  CHECK(cli({"validate", "--plan", "x", "--enumerate"}).code == 2);
  const auto all = cli({"validate", "--enumerate", "--format", "csv"});
  CHECK(all.code == 0);
}

TEST_CASE("recommend") {
  const auto r = cli({"recommend", "--workload", "qiskit-31q", "--alpha", "0"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["payload"]["top"] == "2g.24gb");
  const auto off = cli({"recommend", "--workload", "faiss-large", "--alpha", "0", "--offload"});
  CHECK(json::parse(off.out)["payload"]["top"] == "1g.12gb+offload");
  const auto unknown = cli({"recommend", "--workload", "doom"});
  CHECK(unknown.code == 1);
  CHECK(json::parse(unknown.err)["error"]["kind"] == "unknown-workload");
  CHECK(cli({"recommend"}).code == 2);
  CHECK(cli({"recommend", "--workload", "nekrs", "--alpha", "-1"}).code == 1);
}

TEST_CASE("sweep CSV") {
  const auto r = cli({"sweep", "--workload", "faiss-large", "--offload", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("alpha,config,w_sm,w_mem,rel_perf,reward\n", 0) == 0);
  CHECK(r.out.find("\n0,1g.12gb+offload,") != std::string::npos);
}

TEST_CASE("simulate writes a timeline") {
  const auto path = scratch("timeline.csv");
  const auto r = cli({"simulate", "--workload", "llmc", "--timeline-out", path.string(),
                      "--generated-at-epoch", "0"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["payload"]["throttle_intervals"].size() >= 1);
  const std::string csv = slurp(path);
  CHECK(csv.rfind("t_ms,power_w,clock_mhz,throttled\n0,700,1815,1\n", 0) == 0);
}

TEST_CASE("simulate flags") {
  auto tr = [](std::vector<std::string> extra) {
    std::vector<std::string> a{"simulate", "--workload", "qiskit", "--count", "1", "--scheme",
                               "mig:1x7g.96gb"};
    a.insert(a.end(), extra.begin(), extra.end());
    const auto r = cli(a);
    REQUIRE(r.code == 0);
    return json::parse(r.out)["payload"];
  };
  CHECK(tr({})["throttle_intervals"].size() == 1);
  CHECK(tr({"--cap", "inf"})["throttle_intervals"].empty());
  CHECK(tr({"--cap", "800"})["throttle_intervals"].empty());
  CHECK(cli({"simulate", "--workload", "qiskit", "--cap", "-5"}).code == 1);
  CHECK(cli({"simulate", "--workload", "qiskit", "--step-ms", "0"}).code == 2);
  CHECK(cli({"simulate", "--workload", "qiskit", "--scheme", "bogus"}).code == 1);
}

TEST_CASE("offload what-if") {
  const auto r = cli({"offload-whatif", "--workload", "qiskit-31q"});
  REQUIRE(r.code == 0);
  const auto p = json::parse(r.out)["payload"];
  CHECK(p["estimate"]["spill_fraction"] == 0.3125);
  CHECK(p["estimate"]["access_mode"] == "copy_engine");
  CHECK(p["comparison"]["plain"]["config"] == "1g.24gb");
  const auto direct = cli({"offload-whatif", "--workload", "qiskit-31q", "--mode", "direct",
                           "--hot-fraction", "1"});
  CHECK(json::parse(direct.out)["payload"]["estimate"]["effective_bandwidth"] == "336GiB/s");
  const auto none = cli({"offload-whatif", "--workload", "nekrs"});
  CHECK(none.code == 1);
  CHECK(json::parse(none.err)["error"]["kind"] == "no-offload-needed");
}

TEST_CASE("help documents invented defaults") {
  const auto r = cli({"simulate", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--quantum-ms") != std::string::npos);
  CHECK(r.out.find("model default, not a measured value") != std::string::npos);
  const auto o = cli({"offload-whatif", "--help"});
  CHECK(o.out.find("--hot-fraction") != std::string::npos);
  CHECK(o.out.find("model default") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"catalog", "--format", "xml"}).code == 2);
}

TEST_CASE("byte-identical reports") {
  const std::vector<std::vector<std::string>> cmds = {
      {"simulate", "--workload", "nekrs", "--scheme", "mps:7x13", "--generated-at-epoch", "0"},
      {"sweep", "--workload", "qiskit-31q", "--offload", "--generated-at-epoch", "0"},
      {"catalog", "--generated-at-epoch", "0"},
  };
  for (const auto& c : cmds) {
    const auto a = cli(c), b = cli(c);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("the executable") {
  const auto out = scratch("exe.json");
  const std::string cmd = std::string(MIG_PLANNER_EXE) +
                          " validate --plan 7x1g.12gb --format csv --output " + out.string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp(out) ==
        "plan,wasted_sms,wasted_sm_fraction,wasted_memory,wasted_memory_fraction\n"
        "7x1g.12gb,20,0.151515,17.5GiB,0.185185\n");
  const std::string bad = std::string(MIG_PLANNER_EXE) + " validate --plan 2x4g.48gb 2>/dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 1);
}

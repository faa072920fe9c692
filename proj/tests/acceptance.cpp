// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "migplan/catalog.hpp"
#include "migplan/cli.hpp"
#include "migplan/cosharing.hpp"
#include "migplan/offload.hpp"
#include "migplan/probe.hpp"
#include "migplan/reward.hpp"
#include "migplan/workload.hpp"

using namespace migplan;

namespace {

const Catalog& hw() { return Catalog::builtin(); }
const WorkloadProfile& fixture(const std::string& n) { return find_workload(builtin_profiles(), n); }
const PowerModel kPower = PowerModel::from_gpu(Catalog::builtin().gpu());

struct Outcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CorunReport corun(const std::string& w, int n, std::string_view scheme, PowerModel p = kPower,
                  SimOptions o = {}) {
  const std::vector<CorunGroup> g{{std::cref(fixture(w)), n}};
  return simulate_corun(g, parse_scheme(scheme, hw()), hw(), p, o);
}

std::vector<std::string> suite() {
  std::vector<std::string> out;
  for (const auto& w : builtin_profiles()) {
    if (w.has_tag("corun-suite")) out.push_back(w.name);
  }
  return out;
}

std::string top(const std::string& w, double alpha) {
  return recommend(fixture(w), RewardPolicy::make(alpha), hw(), true).front().config;
}

// ---------------------------------------------------------------------------

Outcome table_waste() {
  Outcome o;
  struct Row {
    const char* name;
    double pct;
    double mem;
  };
  const Row rows[] = {{"1g.12gb", 15.2, 17.5}, {"1g.24gb", 21.2, 2.5}, {"2g.24gb", 3.0, 2.5},
                      {"4g.48gb", 3.0, 1.5},   {"7g.96gb", 0.0, 0.0}};
  for (const auto& r : rows) {
    const WasteReport w = best_case_waste(hw().profile(r.name), hw().gpu());
    const double pct = 100.0 * w.wasted_sm_fraction;
    o.expect(std::abs(pct - r.pct) <= 1.0, std::string(r.name) + " SM waste " + fmt("%.2f%%", pct));
    o.expect(w.wasted_memory == Bytes::from_gib(r.mem),
             std::string(r.name) + " memory waste " + format_bytes(w.wasted_memory));
  }
  return o;
}

Outcome probe_exact() {
  Outcome o;
  for (int n = 1; n <= 256; ++n) {
    SimulatedDevice d(n, 0.005);
    const int got = probe_sm_count(d);
    o.expect(got == n, "noiseless n=" + std::to_string(n) + " probed " + std::to_string(got));
  }
  for (int n : {16, 26, 32, 60, 64, 132}) {
    SimulatedDevice d(n, 0.01, 0.10, 1234 + static_cast<unsigned>(n));
    const int got = probe_sm_count(d);
    o.expect(got == n, "noisy n=" + std::to_string(n) + " probed " + std::to_string(got));
  }
  return o;
}

Outcome reward_orderings() {
  Outcome o;
  const struct {
    const char* w;
    double alpha;
    std::function<bool(const std::string&)> pred;
    const char* want;
  } cases[] = {
      {"faiss-large", 0, [](const std::string& c) { return is_offload_config(c); }, "offload"},
      {"llama3-fp16", 0, [](const std::string& c) { return is_offload_config(c); }, "offload"},
      {"qiskit-31q", 0, [](const std::string& c) { return c == "2g.24gb"; }, "2g.24gb"},
      {"faiss-large", 0.1, [](const std::string& c) { return is_offload_config(c); }, "offload"},
      {"llama3-fp16", 0.1, [](const std::string& c) { return !is_offload_config(c); }, "non-offload"},
      {"qiskit-31q", 0.1, [](const std::string& c) { return !is_offload_config(c); }, "non-offload"},
      {"qiskit-31q", 1, [](const std::string& c) { return c == "full"; }, "full"},
      {"llama3-fp16", 1, [](const std::string& c) { return c == "full"; }, "full"},
      {"faiss-large", 1, [](const std::string& c) { return c == "2g.24gb"; }, "2g.24gb"},
  };
  for (const auto& c : cases) {
    const std::string t = top(c.w, c.alpha);
    o.expect(c.pred(t), std::string(c.w) + fmt(" alpha=%g", c.alpha) + " top " + t +
                            ", want " + c.want);
  }
  return o;
}

Outcome reward_properties() {
  Outcome o;
  testgen::Gen g(4);
  int scale_bad = 0, brute_bad = 0, piecewise_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const WorkloadProfile w = g.workload(hw(), i, g.coin());
    const auto policy = RewardPolicy::make(g.uniform(0, 1));

    WorkloadProfile scaled = w;
    const double c = g.uniform(0.01, 100);
    for (auto& [k, s] : scaled.per_config) s.rel_perf *= c;
    if (recommend(w, policy, hw(), true).front().config !=
        recommend(scaled, policy, hw(), true).front().config) {
      ++scale_bad;
    }

    const auto cands = reward_candidates(w, hw(), true);
    std::vector<RewardResult> all;
    for (const auto& cand : cands) all.push_back(score(cand, w, policy, hw().gpu()));
    const auto best = *std::min_element(all.begin(), all.end(), ranks_before);
    if (best.config != recommend(w, policy, hw(), true).front().config) ++brute_bad;

    std::vector<double> cross;
    for (std::size_t a = 0; a < cands.size(); ++a) {
      for (std::size_t b = a + 1; b < cands.size(); ++b) {
        const double x = reward_crossover(cands[a], cands[b], w, hw().gpu());
        if (x >= 0) cross.push_back(x);
      }
    }
    std::sort(cross.begin(), cross.end());
    std::string prev;
    for (int k = 0; k <= 1000; ++k) {
      const double alpha = 2.0 * k / 1000;
      const std::string cur = recommend(w, RewardPolicy::make(alpha), hw(), true).front().config;
      if (k > 0) {
        const double lo = 2.0 * (k - 1) / 1000 - 1e-9;
        const bool crossed = std::lower_bound(cross.begin(), cross.end(), lo) !=
                             std::upper_bound(cross.begin(), cross.end(), alpha + 1e-9);
        if (!crossed && cur != prev) ++piecewise_bad;
      }
      prev = cur;
    }
  }
  o.expect(scale_bad == 0, std::to_string(scale_bad) + " scale-invariance failures");
  o.expect(brute_bad == 0, std::to_string(brute_bad) + " brute-force mismatches");
  o.expect(piecewise_bad == 0, std::to_string(piecewise_bad) + " argmax changes off a crossover");
  return o;
}

Outcome corun_throughput() {
  Outcome o;
  auto tr = [](const std::string& w) { return corun(w, 7, "mig:7x1g.12gb").throughput_ratio; };
  const double nek = tr("nekrs"), fai = tr("faiss"), qis = tr("qiskit"), hot = tr("hotspot");
  o.expect(std::abs(nek / 2.4 - 1) <= 0.10, fmt("nekrs %.3f", nek));
  o.expect(std::abs(fai / 2.5 - 1) <= 0.10, fmt("faiss %.3f", fai));
  o.expect(qis >= 0.90 && qis <= 1.05, fmt("qiskit %.3f", qis));
  o.expect(hot >= 0.90 && hot <= 1.05, fmt("hotspot %.3f", hot));
  double log_sum = 0;
  const auto names = suite();
  for (const auto& n : names) log_sum += std::log(tr(n));
  const double gm = std::exp(log_sum / static_cast<double>(names.size()));
  o.expect(std::abs(gm / 1.4 - 1) <= 0.15, fmt("geometric mean %.3f", gm));
  if (o.ok) o.detail = fmt("nekrs %.3f", nek) + fmt(", faiss %.3f", fai) + fmt(", gm %.3f", gm);
  return o;
}

Outcome throttling() {
  Outcome o;
  const auto q = corun("qiskit", 7, "mig:7x1g.12gb");
  o.expect(std::abs(q.peak_power_w - 670) <= 20, fmt("qiskit peak %.1f W", q.peak_power_w));
  o.expect(q.throttle_intervals.empty(), "qiskit 7x1g throttled");
  const auto l = corun("llmc", 7, "mig:7x1g.12gb");
  o.expect(!l.throttle_intervals.empty(), "llm training 7x1g not throttled");
  for (const auto& row : l.timeline) {
    if (row.throttled && row.clock_mhz != 1815) {
      o.expect(false, fmt("throttled clock %.0f MHz", row.clock_mhz));
      break;
    }
  }
  const auto solo = corun("qiskit", 1, "mig:1x7g.96gb");
  o.expect(!solo.throttle_intervals.empty(), "qiskit alone on the full GPU not throttled");

  PowerModel open = kPower;
  open.cap_w = std::numeric_limits<double>::infinity();
  SimOptions so;
  for (const auto& n : suite()) {
    for (const char* p : {"1g.12gb", "2g.24gb", "3g.48gb"}) {
      const int k = hw().profile(p).max_instances;
      const auto r = corun(n, k, "mig:" + std::to_string(k) + "x" + p, open, so);
      const double expect = k * relative_performance(fixture(n), p);
      const double tol = expect * so.step_s / std::min(r.makespan_s, fixture(n).runtime_full_s);
      o.expect(std::abs(r.throughput_ratio - expect) <= tol,
               n + " " + p + fmt(" closed form off by %.3g", r.throughput_ratio - expect));
    }
  }
  return o;
}

Outcome energy() {
  Outcome o;
  const double nek = corun("nekrs", 7, "mig:7x1g.12gb").energy_ratio;
  o.expect(nek <= 0.5, fmt("nekrs energy ratio %.3f", nek));
  double sum = 0;
  const auto names = suite();
  for (const auto& n : names) {
    const double mig = corun(n, 7, "mig:7x1g.12gb").energy_ratio;
    const double mps = corun(n, 7, "mps:7x13").energy_ratio;
    const double ts = corun(n, 7, "timeslice").energy_ratio;
    sum += mig;
    o.expect(mig <= mps, n + fmt(" MIG %.3f", mig) + fmt(" above MPS %.3f", mps));
    o.expect(mig <= ts, n + fmt(" MIG %.3f", mig) + fmt(" above time-slicing %.3f", ts));
  }
  const double avg = sum / static_cast<double>(names.size());
  o.expect(std::abs(avg - 0.63) <= 0.10, fmt("suite average %.3f", avg));
  if (o.ok) o.detail = fmt("nekrs %.3f", nek) + fmt(", suite average %.3f", avg);
  return o;
}

Outcome offload_arithmetic() {
  Outcome o;
  const MigProfile& p1 = hw().profile("1g.12gb");
  o.expect(p1.usable_memory == Bytes::from_gib(11), "1g.12gb usable memory");
  const double f = spill_fraction(fixture("qiskit-31q").footprint, p1.usable_memory);
  o.expect(f == 5.0 / 16.0, fmt("spill fraction %.17g", f));
  const C2CLink& link = hw().gpu().c2c_link;
  o.expect(harmonic_bandwidth(0, p1.local_bandwidth, link.direct_d2h) == p1.local_bandwidth,
           "h=0 is not local bandwidth");
  o.expect(harmonic_bandwidth(1, p1.local_bandwidth, link_bandwidth(AccessMode::direct, link)) ==
               Bandwidth::from_gib_per_sec(336),
           "h=1 direct is not 336 GiB/s");
  testgen::Gen g(8);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto local = Bandwidth::from_gib_per_sec(g.uniform(50, 4000));
    const auto l = Bandwidth::from_gib_per_sec(g.uniform(5, local.gib_per_sec()));
    const double h1 = g.uniform(0, 1), h2 = g.uniform(h1, 1), u = g.uniform(0, 1);
    const Bandwidth b1 = harmonic_bandwidth(h1, local, l), b2 = harmonic_bandwidth(h2, local, l);
    const double m1 = bandwidth_bound_multiplier(u, b1.bytes_per_sec / local.bytes_per_sec);
    const double m2 = bandwidth_bound_multiplier(u, b2.bytes_per_sec / local.bytes_per_sec);
    if (b2.bytes_per_sec > b1.bytes_per_sec * (1 + 1e-12) || m2 > m1 + 1e-12) ++bad;
  }
  o.expect(bad == 0, std::to_string(bad) + " monotonicity violations");
  return o;
}

Outcome context_overhead() {
  Outcome o;
  o.expect(context_memory_overhead(MigScheme{}, 7) == Bytes::from_mb(420), "MIG");
  o.expect(context_memory_overhead(TimeSliceScheme{}, 7) == Bytes::from_mb(4200), "time-slicing");
  o.expect(context_memory_overhead(MpsScheme{}, 7) == Bytes::from_mb(600), "MPS");
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::vector<std::string>> cmds = {
      {"simulate", "--workload", "llmc", "--generated-at-epoch", "0"},
      {"simulate", "--workload", "qiskit", "--scheme", "mps:7x13", "--generated-at-epoch", "0"},
      {"simulate", "--workload", "autodock", "--scheme", "timeslice", "--format", "csv"},
      {"sweep", "--workload", "faiss-large", "--offload", "--generated-at-epoch", "0"},
      {"sweep", "--workload", "qiskit-31q", "--format", "csv"},
  };
  for (const auto& c : cmds) {
    std::ostringstream a, b, ea, eb;
    const int ca = dispatch(c, a, ea), cb = dispatch(c, b, eb);
    o.expect(ca == 0 && cb == 0, c[0] + " failed: " + ea.str());
    o.expect(a.str() == b.str() && !a.str().empty(), c[0] + " " + c[2] + " output differs");
  }
  return o;
}

}  // namespace

int main() {
  const struct {
    const char* label;
    Outcome (*fn)();
    double budget_s;  // 0: no runtime bound
  } criteria[] = {
      {"1 best-case waste table", table_waste, 1},
      {"2 probe exactness", probe_exact, 5},
      {"3 reward orderings", reward_orderings, 1},
      {"4 reward properties", reward_properties, 10},
      {"5 co-run throughput", corun_throughput, 0},
      {"6 throttling", throttling, 0},
      {"7 energy", energy, 0},
      {"8 offload arithmetic", offload_arithmetic, 0},
      {"9 context overhead", context_overhead, 0},
      {"10 report determinism", determinism, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.expect(false, fmt("took %.2fs", secs) + fmt(", limit %.0fs", c.budget_s));
    }
    if (!o.ok) ++failed;
    std::printf("%s  %-26s %7.3fs  %s\n", o.ok ? "PASS" : "FAIL", c.label, secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", 10 - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}

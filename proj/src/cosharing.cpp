#include "migplan/cosharing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "migplan/error.hpp"
#include "migplan/offload.hpp"

namespace migplan {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::int64_t kMigContextMb = 60;
constexpr std::int64_t kTimeSliceContextMb = 600;
constexpr std::int64_t kMpsContextMb = 600;

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(errc::kMalformedDocument,
                "bad number '" + std::string(text) + "' in '" + std::string(context) + "'");
  }
  return v;
}

std::string percent_label(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::round(fraction * 1e6) / 1e4);
  return buf;
}

struct SimInstance {
  const WorkloadProfile* workload = nullptr;
  std::string config;
  double base_rate = 0.0;  // unthrottled, before scheme-dependent adjustment
  double power_w = 0.0;    // unthrottled draw before scheme-dependent adjustment
  double bw_util = 0.0;
  Bandwidth bw_demand{};   // MPS only
  Bytes overhead{};
  double remaining = 0.0;  // full-GPU seconds of work left
  double finish = 0.0;
  bool active = true;
  // Per-step values set by the scheme.
  double rate = 0.0;
  double draw = 0.0;
};

using StepModel = std::function<void(std::vector<SimInstance>&)>;

struct RunResult {
  double makespan = 0.0;
  double idle_energy = 0.0;
  double dynamic_energy = 0.0;
  double peak_power = 0.0;
  std::vector<Interval> throttle;
  std::vector<TimelineRow> timeline;
};

RunResult run_fixed_step(std::vector<SimInstance>& instances, const StepModel& model,
                         const PowerModel& power, const SimOptions& options) {
  RunResult out;
  const double step = options.step_s;
  const auto sample_every = std::max<long long>(
      1, std::llround(options.timeline_interval_s / options.step_s));
  const double factor = power.throttle_perf_factor();

  std::size_t active = static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(), [](const auto& i) { return i.active; }));
  bool dirty = true;
  bool prev_throttled = false;
  for (long long idx = 0; active > 0; ++idx) {
    if (dirty) {
      model(instances);
      dirty = false;
    }
    const double t = static_cast<double>(idx) * step;
    double demand = 0.0;
    for (const auto& in : instances) {
      if (in.active) demand += in.draw;
    }
    const bool throttled = power.idle_w + demand > power.cap_w;
    const double speed = throttled ? factor : 1.0;
    const double actual_power = throttled ? power.cap_w : power.idle_w + demand;
    // Under the cap the dynamic budget is split in proportion to demand.
    const double draw_scale =
        throttled && demand > 0.0 ? (power.cap_w - power.idle_w) / demand : 1.0;

    double span = 0.0;
    for (auto& in : instances) {
      if (!in.active) continue;
      const double eff = in.rate * speed;
      double dt = step;
      if (eff > 0.0 && in.remaining <= eff * step) {
        dt = in.remaining / eff;
        in.remaining = 0.0;
        in.finish = t + dt;
        in.active = false;
        --active;
        dirty = true;
      } else {
        in.remaining -= eff * step;
      }
      span = std::max(span, dt);
      out.dynamic_energy += in.draw * draw_scale * dt;
    }
    out.idle_energy += power.idle_w * span;
    out.peak_power = std::max(out.peak_power, actual_power);
    if (throttled) {
      if (prev_throttled) {
        out.throttle.back().end_s = t + span;
      } else {
        out.throttle.push_back({t, t + span});
      }
    }
    prev_throttled = throttled;
    if (idx % sample_every == 0) {
      out.timeline.push_back({t, actual_power,
                              throttled ? power.clock_throttled_mhz : power.clock_max_mhz,
                              throttled});
    }
    if (active == 0) out.makespan = t + span;
  }
  return out;
}

void check_instances_finite(const std::vector<SimInstance>& instances) {
  for (const auto& in : instances) {
    if (!(in.base_rate > 0.0) || !std::isfinite(in.base_rate)) {
      throw Error(errc::kInvariant, "instance of '" + in.workload->name + "' on " + in.config +
                                        " has no positive progress rate");
    }
  }
}

std::vector<const WorkloadProfile*> expand(std::span<const CorunGroup> groups) {
  std::vector<const WorkloadProfile*> out;
  for (const auto& g : groups) {
    if (g.count < 1) throw Error(errc::kInfeasible, "instance counts must be positive");
    for (int i = 0; i < g.count; ++i) out.push_back(&g.profile.get());
  }
  if (out.empty()) throw Error(errc::kInfeasible, "nothing to simulate");
  return out;
}

Bytes total_footprint(const std::vector<const WorkloadProfile*>& ws) {
  Bytes sum;
  for (const auto* w : ws) sum += w->footprint;
  return sum;
}

// Smallest-SM MIG profile the workload has a sample for; the reference point
// for MPS fallbacks and bandwidth demand.
const MigProfile& reference_profile(const WorkloadProfile& w, const Catalog& catalog) {
  const MigProfile* best = nullptr;
  for (const auto& p : catalog.profiles()) {
    if (w.has(p.name) && (best == nullptr || p.usable_sms < best->usable_sms)) best = &p;
  }
  if (best == nullptr) {
    throw Error(errc::kUnknownConfig, "workload '" + w.name + "' has no MIG sample");
  }
  return *best;
}

std::vector<SimInstance> setup_mig(const MigScheme& scheme,
                                   const std::vector<const WorkloadProfile*>& ws,
                                   const Catalog& catalog, const SimOptions& options) {
  const auto slots = scheme.plan.instances();
  if (slots.size() < ws.size()) {
    throw Error(errc::kInfeasible, "plan " + scheme.plan.str() + " offers " +
                                       std::to_string(slots.size()) + " instances, " +
                                       std::to_string(ws.size()) + " requested");
  }
  const Bytes overhead = Bytes::from_mb(kMigContextMb);
  std::vector<SimInstance> out;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const WorkloadProfile& w = *ws[i];
    const MigProfile& p = catalog.profile(slots[i]);
    const ConfigSample& s = w.sample(p.name);
    const double full = w.sample(kFullConfig).rel_perf;
    SimInstance in{.workload = &w, .config = p.name, .base_rate = s.rel_perf / full,
                   .power_w = s.power_w, .bw_util = s.bw_util, .overhead = overhead};
    if (w.footprint + overhead > p.usable_memory) {
      if (!options.allow_offload || w.footprint <= p.usable_memory) {
        throw Error(errc::kMemoryOverflow,
                    "workload '" + w.name + "' (" + format_bytes(w.footprint) +
                        " + context) does not fit " + p.name + " (" +
                        format_bytes(p.usable_memory) + ")");
      }
      const auto e = degraded_performance(w, OffloadScenario::make(w, p), catalog.gpu().c2c_link);
      in.config = e.synthetic_config_name;
      in.base_rate = e.rel_perf / full;
    }
    out.push_back(std::move(in));
  }
  return out;
}

std::vector<SimInstance> setup_mps(const MpsScheme& scheme,
                                   const std::vector<const WorkloadProfile*>& ws,
                                   const Catalog& catalog, const SimOptions& options) {
  if (scheme.sm_fractions.size() != ws.size()) {
    throw Error(errc::kInfeasible, "MPS scheme has " + std::to_string(scheme.sm_fractions.size()) +
                                       " SM shares for " + std::to_string(ws.size()) +
                                       " instances");
  }
  const GpuSpec& gpu = catalog.gpu();
  const Bytes needed = total_footprint(ws) + Bytes::from_mb(kMpsContextMb);
  if (needed > gpu.usable_memory_full) {
    throw Error(errc::kMemoryOverflow, "MPS co-run needs " + format_bytes(needed) + ", GPU has " +
                                           format_bytes(gpu.usable_memory_full));
  }
  std::vector<SimInstance> out;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const WorkloadProfile& w = *ws[i];
    const double share = scheme.sm_fractions[i];
    const double full = w.sample(kFullConfig).rel_perf;
    const MigProfile& ref = reference_profile(w, catalog);
    const double sm_ratio = share * gpu.total_sms / ref.usable_sms;
    const std::string key = std::string(kMpsPrefix) + percent_label(share);
    SimInstance in{.workload = &w, .config = key};
    if (w.has(key)) {
      const ConfigSample& s = w.sample(key);
      in.base_rate = s.rel_perf / full;
      in.power_w = s.power_w;
      in.bw_util = s.bw_util;
    } else {
      const ConfigSample& s = w.sample(ref.name);
      in.base_rate = s.rel_perf * sm_ratio * (1.0 - options.mps_interference) / full;
      in.power_w = s.power_w * sm_ratio;
      in.bw_util = s.bw_util;
    }
    in.bw_demand = {in.bw_util * ref.local_bandwidth.bytes_per_sec * sm_ratio};
    in.overhead = i == 0 ? Bytes::from_mb(kMpsContextMb) : Bytes{};
    out.push_back(std::move(in));
  }
  return out;
}

std::vector<SimInstance> setup_timeslice(const std::vector<const WorkloadProfile*>& ws,
                                         const Catalog& catalog) {
  const Bytes per_process = Bytes::from_mb(kTimeSliceContextMb);
  const Bytes needed = total_footprint(ws) + per_process * static_cast<std::int64_t>(ws.size());
  if (needed > catalog.gpu().usable_memory_full) {
    throw Error(errc::kMemoryOverflow, "time-sliced co-run needs " + format_bytes(needed) +
                                           ", GPU has " +
                                           format_bytes(catalog.gpu().usable_memory_full));
  }
  std::vector<SimInstance> out;
  for (const auto* w : ws) {
    const std::string key = w->has(kTimeSliceConfig) ? std::string(kTimeSliceConfig)
                                                     : std::string(kFullConfig);
    const ConfigSample& s = w->sample(key);
    out.push_back({.workload = w, .config = std::string(kTimeSliceConfig),
                   .base_rate = s.rel_perf / w->sample(kFullConfig).rel_perf,
                   .power_w = s.power_w, .bw_util = s.bw_util, .overhead = per_process});
  }
  return out;
}

StepModel step_model(const SharingScheme& scheme) {
  return std::visit(
      overloaded{
          [](const MigScheme&) -> StepModel {
            return [](std::vector<SimInstance>& xs) {
              for (auto& x : xs) {
                x.rate = x.base_rate;
                x.draw = x.power_w;
              }
            };
          },
          [](const MpsScheme& mps) -> StepModel {
            return [shared = mps.shared_bandwidth](std::vector<SimInstance>& xs) {
              std::vector<Bandwidth> demands;
              for (const auto& x : xs) {
                if (x.active) demands.push_back(x.bw_demand);
              }
              const auto grants = mps_bandwidth_share(demands, shared);
              std::size_t k = 0;
              for (auto& x : xs) {
                if (!x.active) continue;
                const double ratio = x.bw_demand.bytes_per_sec > 0.0
                                         ? grants[k].bytes_per_sec / x.bw_demand.bytes_per_sec
                                         : 1.0;
                ++k;
                x.rate = x.base_rate * std::min(1.0, x.bw_util * ratio + (1.0 - x.bw_util));
                x.draw = x.power_w;
              }
            };
          },
          [](const TimeSliceScheme& ts) -> StepModel {
            return [ts](std::vector<SimInstance>& xs) {
              const int n = static_cast<int>(
                  std::count_if(xs.begin(), xs.end(), [](const auto& x) { return x.active; }));
              const double duty =
                  n > 0 ? timeslice_rate_adjustment(ts.quantum_s, ts.context_switch_cost_s, n)
                        : 0.0;
              for (auto& x : xs) {
                x.rate = x.base_rate * duty;
                x.draw = x.power_w * duty;
              }
            };
          },
      },
      scheme);
}

}  // namespace

// ---------------------------------------------------------------------------

PowerModel PowerModel::from_gpu(const GpuSpec& gpu) {
  PowerModel p;
  p.cap_w = gpu.power_cap_w;
  p.clock_max_mhz = gpu.clock_max_mhz;
  p.clock_throttled_mhz = gpu.clock_throttled_mhz;
  return p;
}

void PowerModel::validate() const {
  if (!(idle_w >= 0.0 && idle_w < cap_w)) {
    throw Error(errc::kInvariant, "power model: idle power must lie in [0, cap)");
  }
  const double f = throttle_perf_factor();
  if (!(f > 0.0 && f < 1.0)) {
    throw Error(errc::kInvariant, "power model: throttled clock must lie below the maximum");
  }
}

SharingScheme parse_scheme(std::string_view text, const Catalog& catalog,
                           const TimeSliceScheme& timeslice) {
  if (text == "timeslice") return timeslice;
  if (text.starts_with("mig:")) return MigScheme{PartitionPlan::parse(text.substr(4))};
  if (text.starts_with("mps:")) {
    std::string_view body = text.substr(4);
    MpsScheme mps;
    mps.shared_bandwidth = catalog.gpu().local_bandwidth_full;
    while (!body.empty()) {
      auto comma = body.find(',');
      std::string_view item = body.substr(0, comma);
      body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
      int count = 1;
      if (auto x = item.find('x'); x != std::string_view::npos) {
        count = static_cast<int>(parse_double(item.substr(0, x), text));
        item = item.substr(x + 1);
      }
      const double pct = parse_double(item, text);
      if (count < 1) throw Error(errc::kMalformedDocument, "MPS share count must be positive");
      for (int i = 0; i < count; ++i) mps.sm_fractions.push_back(pct / 100.0);
    }
    if (mps.sm_fractions.empty()) throw Error(errc::kMalformedDocument, "MPS scheme has no shares");
    return mps;
  }
  throw Error(errc::kMalformedDocument, "unknown sharing scheme '" + std::string(text) +
                                            "' (expected mig:<plan>, mps:<n>x<pct>, timeslice)");
}

std::string scheme_name(const SharingScheme& scheme) {
  return std::visit(
      overloaded{
          [](const MigScheme& m) { return "mig:" + m.plan.str(); },
          [](const MpsScheme& m) {
            std::string s = "mps:";
            const bool uniform = std::all_of(m.sm_fractions.begin(), m.sm_fractions.end(),
                                             [&](double f) { return f == m.sm_fractions.front(); });
            if (uniform && !m.sm_fractions.empty()) {
              return s + std::to_string(m.sm_fractions.size()) + "x" +
                     percent_label(m.sm_fractions.front());
            }
            for (std::size_t i = 0; i < m.sm_fractions.size(); ++i) {
              if (i) s += ',';
              s += percent_label(m.sm_fractions[i]);
            }
            return s;
          },
          [](const TimeSliceScheme&) { return std::string("timeslice"); },
      },
      scheme);
}

void validate_scheme(const SharingScheme& scheme, const Catalog& catalog) {
  std::visit(overloaded{
                 [&](const MigScheme& m) {
                   Verdict v = validate_partition(m.plan, catalog);
                   if (!v.valid) {
                     throw Error(errc::kInvalidPlan, "plan '" + m.plan.str() + "' is invalid",
                                 v.reasons);
                   }
                 },
                 [](const MpsScheme& m) {
                   double sum = 0.0;
                   for (double f : m.sm_fractions) {
                     if (!(f > 0.0 && f <= 1.0)) {
                       throw Error(errc::kInvariant, "MPS SM shares must lie in (0, 1]");
                     }
                     sum += f;
                   }
                   if (sum > 1.0 + 1e-9) {
                     throw Error(errc::kInvariant, "MPS SM shares sum to more than 100%");
                   }
                   if (!(m.shared_bandwidth.bytes_per_sec > 0.0)) {
                     throw Error(errc::kInvariant, "MPS shared bandwidth must be positive");
                   }
                 },
                 [](const TimeSliceScheme& t) {
                   if (!(t.quantum_s > 0.0) || !(t.context_switch_cost_s >= 0.0)) {
                     throw Error(errc::kInvariant,
                                 "time-slice quantum must be positive and switch cost >= 0");
                   }
                 },
             },
             scheme);
}

double timeslice_rate_adjustment(double quantum_s, double context_switch_cost_s,
                                 int n_processes) {
  if (!(quantum_s > 0.0) || context_switch_cost_s < 0.0 || n_processes < 1) {
    throw Error(errc::kOutOfRange, "time-slice parameters must be positive");
  }
  return quantum_s / (n_processes * (quantum_s + context_switch_cost_s));
}

Bytes context_memory_overhead(const SharingScheme& scheme, int n_processes) {
  if (n_processes < 1) throw Error(errc::kOutOfRange, "need at least one process");
  return std::visit(overloaded{
                        [&](const MigScheme&) { return Bytes::from_mb(kMigContextMb) * n_processes; },
                        [&](const TimeSliceScheme&) {
                          return Bytes::from_mb(kTimeSliceContextMb) * n_processes;
                        },
                        [](const MpsScheme&) { return Bytes::from_mb(kMpsContextMb); },
                    },
                    scheme);
}

std::vector<Bandwidth> mps_bandwidth_share(std::span<const Bandwidth> demands,
                                           Bandwidth shared_bandwidth) {
  double total = 0.0;
  for (const auto& d : demands) {
    if (d.bytes_per_sec < 0.0) throw Error(errc::kOutOfRange, "bandwidth demand is negative");
    total += d.bytes_per_sec;
  }
  std::vector<Bandwidth> grants(demands.begin(), demands.end());
  if (total > shared_bandwidth.bytes_per_sec) {
    const double scale = shared_bandwidth.bytes_per_sec / total;
    for (auto& g : grants) g.bytes_per_sec *= scale;
  }
  return grants;
}

CorunReport simulate_corun(std::span<const CorunGroup> workloads, const SharingScheme& scheme,
                           const Catalog& catalog, const PowerModel& power,
                           const SimOptions& options) {
  power.validate();
  validate_scheme(scheme, catalog);
  if (!(options.step_s > 0.0) || !(options.timeline_interval_s > 0.0)) {
    throw Error(errc::kOutOfRange, "simulation step and timeline interval must be positive");
  }
  const auto ws = expand(workloads);

  std::vector<SimInstance> instances = std::visit(
      overloaded{
          [&](const MigScheme& m) { return setup_mig(m, ws, catalog, options); },
          [&](const MpsScheme& m) { return setup_mps(m, ws, catalog, options); },
          [&](const TimeSliceScheme&) { return setup_timeslice(ws, catalog); },
      },
      scheme);
  check_instances_finite(instances);
  for (auto& in : instances) in.remaining = in.workload->runtime_full_s;

  CorunReport report;
  report.scheme = scheme_name(scheme);
  RunResult run = run_fixed_step(instances, step_model(scheme), power, options);
  report.makespan_s = run.makespan;
  report.idle_energy_j = run.idle_energy;
  report.dynamic_energy_j = run.dynamic_energy;
  report.energy_j = run.idle_energy + run.dynamic_energy;
  report.peak_power_w = run.peak_power;
  report.throttle_intervals = std::move(run.throttle);
  report.timeline = std::move(run.timeline);
  for (const auto& iv : report.throttle_intervals) {
    report.throttled_time_s += iv.end_s - iv.start_s;
  }
  for (const auto& in : instances) {
    report.instances.push_back({in.workload->name, in.config, in.base_rate, in.power_w,
                                in.overhead, in.finish});
  }

  // Serial baseline: each run alone on the whole GPU, back to back.
  for (const auto& g : workloads) {
    const WorkloadProfile& w = g.profile.get();
    const ConfigSample& full = w.sample(kFullConfig);
    std::vector<SimInstance> solo{{.workload = &w, .config = std::string(kFullConfig),
                                   .base_rate = 1.0, .power_w = full.power_w,
                                   .remaining = w.runtime_full_s}};
    RunResult one = run_fixed_step(solo, step_model(MigScheme{}), power, options);
    report.serial_makespan_s += g.count * one.makespan;
    report.serial_energy_j += g.count * (one.idle_energy + one.dynamic_energy);
  }
  report.throughput_ratio = report.serial_makespan_s / report.makespan_s;
  report.energy_ratio = report.energy_j / report.serial_energy_j;
  return report;
}

EnergySummary energy_report(const CorunReport& report) {
  return {report.energy_ratio, report.energy_j, report.serial_energy_j, report.idle_energy_j,
          report.dynamic_energy_j};
}

}  // namespace migplan

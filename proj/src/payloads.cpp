#include "migplan/payloads.hpp"

#include <cmath>

namespace migplan {
namespace {

using nlohmann::json;

std::string num(double v) { return format_number(v); }

std::vector<std::string> reward_row(double alpha, const RewardResult& r) {
  return {num(alpha), r.config,     num(r.w_sm),
          num(r.w_mem), num(r.rel_perf), r.unbounded ? "+inf" : num(r.reward)};
}

const std::vector<std::string> kRewardHeader = {"alpha", "config", "w_sm",
                                                "w_mem", "rel_perf", "reward"};

}  // namespace

json to_json(const WasteReport& w) {
  return {{"wasted_sms", w.wasted_sms},
          {"wasted_sm_fraction", w.wasted_sm_fraction},
          {"wasted_memory", format_bytes(w.wasted_memory)},
          {"wasted_memory_fraction", w.wasted_memory_fraction}};
}

json to_json(const RewardResult& r) {
  json j = {{"config", r.config},
            {"usable_sms", r.usable_sms},
            {"usable_memory", format_bytes(r.usable_memory)},
            {"w_sm", r.w_sm},
            {"w_mem", r.w_mem},
            {"rel_perf", r.rel_perf},
            {"unbounded", r.unbounded},
            {"offload", r.offload}};
  j["reward"] = r.unbounded ? json("+inf") : json(r.reward);
  return j;
}

json to_json(const CorunReport& r) {
  json intervals = json::array();
  for (const auto& iv : r.throttle_intervals) intervals.push_back({iv.start_s, iv.end_s});
  json instances = json::array();
  for (const auto& in : r.instances) {
    instances.push_back({{"workload", in.workload},
                         {"config", in.config},
                         {"base_rate", in.base_rate},
                         {"power_draw_w", in.power_draw_w},
                         {"context_memory_overhead", format_bytes(in.context_memory_overhead)},
                         {"finish_s", in.finish_s}});
  }
  json timeline = json::array();
  for (const auto& row : r.timeline) {
    timeline.push_back({row.t_s, row.power_w, row.clock_mhz, row.throttled});
  }
  return {{"scheme", r.scheme},
          {"makespan_s", r.makespan_s},
          {"serial_makespan_s", r.serial_makespan_s},
          {"throughput_ratio", r.throughput_ratio},
          {"energy_j", r.energy_j},
          {"serial_energy_j", r.serial_energy_j},
          {"energy_ratio", r.energy_ratio},
          {"idle_energy_j", r.idle_energy_j},
          {"dynamic_energy_j", r.dynamic_energy_j},
          {"peak_power_w", r.peak_power_w},
          {"throttled_time_s", r.throttled_time_s},
          {"throttle_intervals", intervals},
          {"timeline_columns", {"t_s", "power_w", "clock_mhz", "throttled"}},
          {"timeline", timeline},
          {"instances", instances}};
}

json to_json(const OffloadEstimate& e) {
  const auto& s = e.scenario;
  return {{"workload", s.workload},
          {"base_profile", s.base.name},
          {"config", e.synthetic_config_name},
          {"footprint", format_bytes(s.footprint)},
          {"spill", format_bytes(s.spill)},
          {"spill_fraction", s.spill_fraction},
          {"access_mode", std::string(to_string(s.access_mode))},
          {"hot_fraction", s.hot_fraction},
          {"effective_bandwidth", format_bandwidth(e.effective_bandwidth)},
          {"perf_multiplier", e.perf_multiplier},
          {"perf_multiplier_measured", e.measured},
          {"rel_perf_1g", e.rel_perf}};
}

std::vector<std::string> waste_row(const std::string& label, const WasteReport& w) {
  return {label, std::to_string(w.wasted_sms), num(w.wasted_sm_fraction),
          format_bytes(w.wasted_memory), num(w.wasted_memory_fraction)};
}

Table waste_table(const std::vector<std::pair<std::string, WasteReport>>& rows) {
  Table t{{"plan", "wasted_sms", "wasted_sm_fraction", "wasted_memory", "wasted_memory_fraction"},
          {}};
  for (const auto& [label, w] : rows) t.rows.push_back(waste_row(label, w));
  return t;
}

View catalog_view(const Catalog& catalog) {
  View v;
  v.payload = catalog_to_json(catalog);
  json best = json::object();
  v.table.header = {"profile",       "max_instances", "usable_sms",   "compute_slices",
                    "memory_slices", "usable_memory", "l2_fraction",  "copy_engines",
                    "bandwidth",     "wasted_sms",    "wasted_sm_pct", "wasted_memory"};
  for (const auto& p : catalog.profiles()) {
    const WasteReport w = best_case_waste(p, catalog.gpu());
    json entry = to_json(w);
    entry["instances"] = best_case_instances(p, catalog.gpu());
    best[p.name] = entry;
    v.table.rows.push_back({p.name, std::to_string(p.max_instances), std::to_string(p.usable_sms),
                            std::to_string(p.compute_slice_count),
                            std::to_string(p.memory_slice_count), format_bytes(p.usable_memory),
                            p.l2_fraction.str(), std::to_string(p.copy_engines),
                            format_bandwidth(p.local_bandwidth), std::to_string(w.wasted_sms),
                            num(100.0 * w.wasted_sm_fraction), format_bytes(w.wasted_memory)});
  }
  v.payload["best_case_waste"] = best;
  return v;
}

View validate_view(const PartitionPlan& plan, const Catalog& catalog) {
  const WasteReport w = plan_waste(plan, catalog);
  const PlanTotals t = plan_totals(plan, catalog);
  View v;
  v.payload = {{"plan", plan.str()},
               {"valid", true},
               {"instances", plan.instance_count()},
               {"compute_slices", t.compute_slices},
               {"memory_slices", t.memory_slices},
               {"usable_sms", t.usable_sms},
               {"usable_memory", format_bytes(t.usable_memory)},
               {"waste", to_json(w)}};
  v.table = waste_table({{plan.str(), w}});
  return v;
}

View enumerate_view(const Catalog& catalog) {
  View v;
  v.payload = json::array();
  std::vector<std::pair<std::string, WasteReport>> rows;
  for (const auto& plan : enumerate_partitions(catalog)) {
    const WasteReport w = plan_waste(plan, catalog);
    json entry = to_json(w);
    entry["plan"] = plan.str();
    v.payload.push_back(entry);
    rows.emplace_back(plan.str(), w);
  }
  v.table = waste_table(rows);
  return v;
}

View probe_view(const std::vector<ProbeRow>& rows) {
  View v;
  v.payload = json::array();
  v.table.header = {"profile", "probed_sms", "catalog_sms", "match"};
  for (const auto& r : rows) {
    v.payload.push_back({{"profile", r.profile},
                         {"probed_sms", r.probed_sms},
                         {"catalog_sms", r.catalog_sms},
                         {"match", r.match}});
    v.table.rows.push_back({r.profile, std::to_string(r.probed_sms), std::to_string(r.catalog_sms),
                            r.match ? "true" : "false"});
  }
  return v;
}

View recommend_view(const std::string& workload, double alpha,
                    const std::vector<RewardResult>& ranked) {
  View v;
  json list = json::array();
  v.table.header = kRewardHeader;
  for (const auto& r : ranked) {
    list.push_back(to_json(r));
    v.table.rows.push_back(reward_row(alpha, r));
  }
  v.payload = {{"workload", workload},
               {"alpha", alpha},
               {"top", ranked.empty() ? json(nullptr) : json(ranked.front().config)},
               {"ranked", list}};
  return v;
}

View sweep_view(const std::string& workload, const std::vector<SweepRow>& rows) {
  View v;
  json list = json::array();
  v.table.header = kRewardHeader;
  for (const auto& row : rows) {
    json ranked = json::array();
    for (const auto& r : row.ranked) {
      ranked.push_back(to_json(r));
      v.table.rows.push_back(reward_row(row.alpha, r));
    }
    list.push_back({{"alpha", row.alpha},
                    {"top", row.ranked.empty() ? json(nullptr) : json(row.ranked.front().config)},
                    {"ranked", ranked}});
  }
  v.payload = {{"workload", workload}, {"sweep", list}};
  return v;
}

View simulate_view(const std::string& workload, int count, const CorunReport& report) {
  View v;
  v.payload = to_json(report);
  v.payload["workload"] = workload;
  v.payload["count"] = count;
  v.table = timeline_table(report);
  return v;
}

Table timeline_table(const CorunReport& report) {
  Table t{{"t_ms", "power_w", "clock_mhz", "throttled"}, {}};
  for (const auto& row : report.timeline) {
    t.rows.push_back({num(row.t_s * 1e3), num(row.power_w), num(row.clock_mhz),
                      row.throttled ? "1" : "0"});
  }
  return t;
}

}  // namespace migplan

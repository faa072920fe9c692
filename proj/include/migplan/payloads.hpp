#pragma once

// Domain results as report payloads (JSON) and flat tables (csv/table).

#include <string>
#include <vector>

#include <json.hpp>

#include "migplan/catalog.hpp"
#include "migplan/cosharing.hpp"
#include "migplan/offload.hpp"
#include "migplan/probe.hpp"
#include "migplan/report.hpp"
#include "migplan/reward.hpp"

namespace migplan {

struct View {
  nlohmann::json payload;
  Table table;
};

nlohmann::json to_json(const WasteReport& w);
nlohmann::json to_json(const RewardResult& r);
nlohmann::json to_json(const CorunReport& r);
nlohmann::json to_json(const OffloadEstimate& e);

// Columns: plan, wasted_sms, wasted_sm_fraction, wasted_memory, wasted_memory_fraction.
std::vector<std::string> waste_row(const std::string& label, const WasteReport& w);
Table waste_table(const std::vector<std::pair<std::string, WasteReport>>& rows);

View catalog_view(const Catalog& catalog);
View validate_view(const PartitionPlan& plan, const Catalog& catalog);
View enumerate_view(const Catalog& catalog);
View probe_view(const std::vector<ProbeRow>& rows);
View recommend_view(const std::string& workload, double alpha,
                    const std::vector<RewardResult>& ranked);
// Rows (alpha, config, w_sm, w_mem, rel_perf, reward), all candidates per alpha.
View sweep_view(const std::string& workload, const std::vector<SweepRow>& rows);
View simulate_view(const std::string& workload, int count, const CorunReport& report);
// Columns t_ms, power_w, clock_mhz, throttled.
Table timeline_table(const CorunReport& report);

}  // namespace migplan

#include "migplan/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string_view>

#include "json_util.hpp"
#include "migplan/error.hpp"

namespace migplan {

namespace detail {
extern const std::string_view kEmbeddedWorkloads;
}

namespace {

using detail::get_bytes;
using detail::get_number;
using detail::get_string;
using nlohmann::json;

bool is_mig_config_name(std::string_view name) {
  return name != kFullConfig && name != kTimeSliceConfig && !name.starts_with(kMpsPrefix);
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw Error(errc::kInvariant, field + ": " + what);
}

std::set<std::string> string_set(const json& obj, std::string_view key,
                                 std::string_view path) {
  std::set<std::string> out;
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return out;
  if (!it->is_array()) {
    throw Error(errc::kMalformedDocument,
                "field '" + detail::join_path(path, key) + "' must be an array of strings");
  }
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw Error(errc::kMalformedDocument,
                  "field '" + detail::join_path(path, key) + "' must contain strings only");
    }
    out.insert(v.get<std::string>());
  }
  return out;
}

WorkloadProfile parse_record(const json& rec, const std::string& at) {
  WorkloadProfile w;
  w.name = get_string(rec, "name", at);
  w.description = rec.value("description", std::string{});
  w.footprint = get_bytes(rec, "footprint", at);
  w.runtime_full_s = get_number(rec, "runtime_full_s", at);
  w.pipelines = string_set(rec, "pipelines", at);
  w.tags = string_set(rec, "tags", at);

  const json& configs = detail::require(rec, "per_config", at);
  if (!configs.is_object()) {
    throw Error(errc::kMalformedDocument, "field '" + at + ".per_config' must be an object");
  }
  for (const auto& [key, s] : configs.items()) {
    const std::string path = at + ".per_config." + key;
    w.per_config.emplace(key, ConfigSample{
                                  .occupancy = get_number(s, "occupancy", path),
                                  .rel_perf = get_number(s, "rel_perf", path),
                                  .bw_util = get_number(s, "bw_util", path),
                                  .power_w = get_number(s, "power", path),
                              });
  }

  if (auto it = rec.find("offload"); it != rec.end()) {
    const std::string path = at + ".offload";
    if (it->contains("access_mode")) {
      w.offload.access_mode = parse_access_mode(get_string(*it, "access_mode", path));
    }
    if (it->contains("hot_fraction")) {
      w.offload.hot_fraction = get_number(*it, "hot_fraction", path);
    }
    if (it->contains("perf_multiplier")) {
      w.offload.perf_multiplier = get_number(*it, "perf_multiplier", path);
    }
  }
  if (auto it = rec.find("annotations"); it != rec.end()) w.annotations = *it;
  return w;
}

}  // namespace

std::string_view to_string(AccessMode mode) {
  return mode == AccessMode::direct ? "direct" : "copy_engine";
}

AccessMode parse_access_mode(std::string_view text) {
  if (text == "direct") return AccessMode::direct;
  if (text == "copy_engine" || text == "ce") return AccessMode::copy_engine;
  throw Error(errc::kMalformedDocument,
              "access mode must be 'direct' or 'copy_engine', got '" + std::string(text) + "'");
}

const ConfigSample& WorkloadProfile::sample(std::string_view config) const {
  auto it = per_config.find(config);
  if (it == per_config.end()) {
    throw Error(errc::kUnknownConfig,
                "workload '" + name + "' has no sample for config '" + std::string(config) + "'");
  }
  return it->second;
}

void WorkloadProfile::validate() const {
  const std::string at = "workload '" + name + "'";
  check(!name.empty(), "workload.name", "must not be empty");
  check(footprint.count > 0, at + ".footprint", "must be positive");
  check(runtime_full_s > 0.0, at + ".runtime_full_s", "must be positive");
  check(!per_config.empty(), at + ".per_config", "must not be empty");
  check(has(kFullConfig), at + ".per_config", "needs a 'full' sample");
  check(std::any_of(per_config.begin(), per_config.end(),
                    [](const auto& kv) { return is_mig_config_name(kv.first); }),
        at + ".per_config", "needs at least one MIG profile sample");
  for (const auto& [config, s] : per_config) {
    const std::string field = at + ".per_config." + config;
    check(s.occupancy >= 0.0 && s.occupancy <= 1.0, field + ".occupancy", "outside [0, 1]");
    check(s.bw_util >= 0.0 && s.bw_util <= 1.0, field + ".bw_util", "outside [0, 1]");
    check(s.rel_perf > 0.0, field + ".rel_perf", "must be positive");
    check(s.power_w >= 0.0, field + ".power", "must not be negative");
  }
  if (auto it = per_config.find("1g.12gb"); it != per_config.end()) {
    check(std::abs(it->second.rel_perf - 1.0) < 1e-9, at + ".per_config.1g.12gb.rel_perf",
          "the 1g.12gb sample is the normalisation point and must equal 1");
  }
  if (offload.hot_fraction) {
    check(*offload.hot_fraction >= 0.0 && *offload.hot_fraction <= 1.0,
          at + ".offload.hot_fraction", "outside [0, 1]");
  }
  if (offload.perf_multiplier) {
    check(*offload.perf_multiplier > 0.0 && *offload.perf_multiplier <= 1.0,
          at + ".offload.perf_multiplier", "outside (0, 1]");
  }
}

std::vector<WorkloadProfile> load_profiles(const json& doc) {
  const json* list = &doc;
  if (doc.is_object()) list = &detail::require(doc, "workloads", "");
  if (!list->is_array()) {
    throw Error(errc::kMalformedDocument, "workload document must be an array of records");
  }
  std::vector<WorkloadProfile> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < list->size(); ++i) {
    WorkloadProfile w = parse_record((*list)[i], "workloads[" + std::to_string(i) + "]");
    w.validate();
    if (!names.insert(w.name).second) {
      throw Error(errc::kInvariant, "duplicate workload name '" + w.name + "'");
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WorkloadProfile> load_profiles_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open profile file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(errc::kMalformedDocument,
                "profiles '" + path.string() + "' are not valid JSON: " + e.what());
  }
  return load_profiles(doc);
}

json profiles_to_json(const std::vector<WorkloadProfile>& profiles) {
  json list = json::array();
  for (const auto& w : profiles) {
    json configs = json::object();
    for (const auto& [name, s] : w.per_config) {
      configs[name] = {{"occupancy", s.occupancy},
                       {"rel_perf", s.rel_perf},
                       {"bw_util", s.bw_util},
                       {"power", s.power_w}};
    }
    json rec = {
        {"name", w.name},
        {"footprint", format_bytes(w.footprint)},
        {"runtime_full_s", w.runtime_full_s},
        {"pipelines", w.pipelines},
        {"tags", w.tags},
        {"per_config", std::move(configs)},
        {"annotations", w.annotations},
    };
    if (!w.description.empty()) rec["description"] = w.description;
    json hints = json::object();
    if (w.offload.access_mode) hints["access_mode"] = to_string(*w.offload.access_mode);
    if (w.offload.hot_fraction) hints["hot_fraction"] = *w.offload.hot_fraction;
    if (w.offload.perf_multiplier) hints["perf_multiplier"] = *w.offload.perf_multiplier;
    if (!hints.empty()) rec["offload"] = std::move(hints);
    list.push_back(std::move(rec));
  }
  return json{{"workloads", std::move(list)}};
}

const std::vector<WorkloadProfile>& builtin_profiles() {
  static const std::vector<WorkloadProfile> profiles =
      load_profiles(json::parse(detail::kEmbeddedWorkloads));
  return profiles;
}

const WorkloadProfile& find_workload(const std::vector<WorkloadProfile>& profiles,
                                     std::string_view name) {
  auto it = std::find_if(profiles.begin(), profiles.end(),
                         [&](const WorkloadProfile& w) { return w.name == name; });
  if (it == profiles.end()) {
    throw Error(errc::kUnknownWorkload, "unknown workload '" + std::string(name) + "'");
  }
  return *it;
}

double relative_performance(const WorkloadProfile& profile, std::string_view config) {
  return profile.sample(config).rel_perf / profile.sample(kFullConfig).rel_perf;
}

double ScalingCurve::deviation_from_ideal() const {
  double worst = 0.0;
  for (const auto& p : points) {
    const double ideal_perf = ideal(p.usable_sms);
    worst = std::max(worst, (ideal_perf - p.rel_perf) / ideal_perf);
  }
  return worst;
}

ScalingCurve scaling_curve(const WorkloadProfile& profile, const Catalog& catalog) {
  ScalingCurve curve;
  curve.baseline_sms = std::min_element(catalog.profiles().begin(), catalog.profiles().end(),
                                        [](const MigProfile& a, const MigProfile& b) {
                                          return a.usable_sms < b.usable_sms;
                                        })
                           ->usable_sms;
  check(curve.baseline_sms > 0, "catalog", "smallest profile has no usable SMs");
  for (const auto& [config, s] : profile.per_config) {
    if (const MigProfile* p = catalog.find(config)) {
      curve.points.push_back({config, p->usable_sms, s.rel_perf});
    }
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const ScalingPoint& a, const ScalingPoint& b) {
              if (a.usable_sms != b.usable_sms) return a.usable_sms < b.usable_sms;
              return a.rel_perf > b.rel_perf;
            });
  // Profiles sharing an SM count collapse to their best sample.
  curve.points.erase(std::unique(curve.points.begin(), curve.points.end(),
                                 [](const ScalingPoint& a, const ScalingPoint& b) {
                                   return a.usable_sms == b.usable_sms;
                                 }),
                     curve.points.end());
  if (curve.points.size() < 2) {
    throw Error(errc::kInvariant, "workload '" + profile.name +
                                      "' needs at least two MIG samples for a scaling curve");
  }
  return curve;
}

}  // namespace migplan

#include "migplan/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>

#include "json_util.hpp"
#include "migplan/error.hpp"

namespace migplan {
namespace {

using detail::get_bandwidth;
using detail::get_bytes;
using detail::get_int;
using detail::get_number;
using detail::get_string;
using nlohmann::json;

[[noreturn]] void violated(const std::string& field, const std::string& what) {
  throw Error(errc::kInvariant, field + ": " + what);
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) violated(field, what);
}

int parse_int(std::string_view text, std::string_view context) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(errc::kMalformedDocument,
                "bad integer '" + std::string(text) + "' in '" +
                    std::string(context) + "'");
  }
  return value;
}

}  // namespace

std::string Ratio::str() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

Ratio Ratio::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(errc::kMalformedDocument,
                "expected a ratio like '1/8', got '" + std::string(text) + "'");
  }
  Ratio r{parse_int(text.substr(0, slash), text),
          parse_int(text.substr(slash + 1), text)};
  if (r.den <= 0) {
    throw Error(errc::kMalformedDocument,
                "ratio denominator must be positive in '" + std::string(text) + "'");
  }
  return r;
}

void C2CLink::validate() const {
  const std::pair<const char*, Bandwidth> all[] = {
      {"c2c_link.direct_d2h", direct_d2h},
      {"c2c_link.direct_h2d", direct_h2d},
      {"c2c_link.direct_bidir", direct_bidir},
      {"c2c_link.ce_d2h_per_1g", ce_d2h_per_1g},
      {"c2c_link.ce_h2d_per_1g", ce_h2d_per_1g},
  };
  for (const auto& [field, bw] : all) {
    check(bw.bytes_per_sec > 0.0, field, "must be positive");
  }
  check(ce_d2h_per_1g <= direct_d2h, "c2c_link.ce_d2h_per_1g",
        "must not exceed direct_d2h");
  check(ce_h2d_per_1g <= direct_h2d, "c2c_link.ce_h2d_per_1g",
        "must not exceed direct_h2d");
}

void GpuSpec::validate() const {
  check(!name.empty(), "gpu.name", "must not be empty");
  check(total_sms > 0, "gpu.total_sms", "must be positive");
  check(compute_slices > 0, "gpu.compute_slices", "must be positive");
  check(memory_slices > 0, "gpu.memory_slices", "must be positive");
  check(usable_memory_full.count > 0, "gpu.usable_memory_full", "must be positive");
  check(usable_memory_full <= nominal_memory, "gpu.usable_memory_full",
        "must not exceed nominal_memory");
  check(local_bandwidth_full.bytes_per_sec > 0.0, "gpu.local_bandwidth_full",
        "must be positive");
  check(power_cap_w > 0.0, "gpu.power_cap", "must be positive");
  check(clock_throttled_mhz > 0.0, "gpu.clock_throttled", "must be positive");
  check(clock_throttled_mhz < clock_max_mhz, "gpu.clock_throttled",
        "must be below clock_max");
  c2c_link.validate();
}

void MigProfile::validate(const GpuSpec& gpu) const {
  const std::string at = "profile '" + name + "'.";
  check(!name.empty(), "profile.name", "must not be empty");
  check(max_instances >= 1, at + "max_instances", "must be at least 1");
  check(usable_sms >= 0 && usable_sms <= gpu.total_sms, at + "usable_sms",
        std::to_string(usable_sms) + " outside [0, " + std::to_string(gpu.total_sms) + "]");
  check(usable_memory.count > 0 && usable_memory <= gpu.usable_memory_full,
        at + "usable_memory", "must lie in (0, usable_memory_full]");
  check(compute_slice_count >= 1 && compute_slice_count <= gpu.compute_slices,
        at + "compute_slice_count",
        std::to_string(compute_slice_count) + " outside [1, " +
            std::to_string(gpu.compute_slices) + "]");
  check(memory_slice_count >= 1 && memory_slice_count <= gpu.memory_slices,
        at + "memory_slice_count",
        std::to_string(memory_slice_count) + " outside [1, " +
            std::to_string(gpu.memory_slices) + "]");
  check(max_instances * compute_slice_count <= gpu.compute_slices,
        at + "max_instances", "max_instances x compute_slice_count exceeds compute slices");
  check(max_instances * memory_slice_count <= gpu.memory_slices, at + "max_instances",
        "max_instances x memory_slice_count exceeds memory slices");
  check(l2_fraction.num > 0 && l2_fraction.num <= l2_fraction.den, at + "l2_fraction",
        "must lie in (0, 1]");
  check(copy_engines >= 0, at + "copy_engines", "must not be negative");
  check(local_bandwidth.bytes_per_sec > 0.0 && local_bandwidth <= gpu.local_bandwidth_full,
        at + "local_bandwidth", "must lie in (0, local_bandwidth_full]");
}

Catalog::Catalog(GpuSpec gpu, std::vector<MigProfile> profiles)
    : gpu_(std::move(gpu)), profiles_(std::move(profiles)) {
  gpu_.validate();
  if (profiles_.empty()) {
    throw Error(errc::kInvariant, "profiles: catalog needs at least one profile");
  }
  std::set<std::string> seen;
  for (const auto& p : profiles_) {
    p.validate(gpu_);
    if (!seen.insert(p.name).second) {
      violated("profile '" + p.name + "'", "duplicate profile name");
    }
  }
}

const Catalog& Catalog::builtin() {
  static const Catalog catalog = [] {
    GpuSpec gpu{
        .name = "GH200 H100 96GB",
        .total_sms = 132,
        .compute_slices = 7,
        .memory_slices = 8,
        .usable_memory_full = Bytes::from_gib(94.5),
        .nominal_memory = Bytes::from_gib(96),
        .local_bandwidth_full = Bandwidth::from_gib_per_sec(3175),
        .power_cap_w = 700,
        .clock_max_mhz = 1980,
        .clock_throttled_mhz = 1815,
        .c2c_link =
            {
                .direct_d2h = Bandwidth::from_gib_per_sec(336),
                .direct_h2d = Bandwidth::from_gib_per_sec(348),
                .direct_bidir = Bandwidth::from_gib_per_sec(330),
                .ce_d2h_per_1g = Bandwidth::from_gib_per_sec(39.6),
                .ce_h2d_per_1g = Bandwidth::from_gib_per_sec(44.0),
            },
    };
    auto profile = [](std::string name, int max_inst, int sms, int cs, int ms,
                      double mem_gib, Ratio l2, int ces, double bw_gib,
                      std::string note = {}) {
      return MigProfile{std::move(name), max_inst,  sms, cs, ms,
                        Bytes::from_gib(mem_gib), l2, ces,
                        Bandwidth::from_gib_per_sec(bw_gib), std::move(note)};
    };
    std::vector<MigProfile> profiles{
        profile("1g.12gb", 7, 16, 1, 1, 11, {1, 8}, 1, 406),
        profile("1g.24gb", 4, 26, 1, 2, 23, {2, 8}, 2, 812),
        profile("2g.24gb", 3, 32, 2, 2, 23, {2, 8}, 2, 812),
        profile("3g.48gb", 2, 60, 3, 4, 46.5, {4, 8}, 3, 1611,
                "wasted SMs published as 6/9%: the two packings with a 4g or a "
                "second 3g instance"),
        profile("4g.48gb", 1, 64, 4, 4, 46.5, {4, 8}, 4, 1635),
        profile("7g.96gb", 1, 132, 7, 8, 94.5, {8, 8}, 8, 3175),
    };
    return Catalog(std::move(gpu), std::move(profiles));
  }();
  return catalog;
}

const MigProfile* Catalog::find(std::string_view name) const {
  auto it = std::find_if(profiles_.begin(), profiles_.end(),
                         [&](const MigProfile& p) { return p.name == name; });
  return it == profiles_.end() ? nullptr : &*it;
}

const MigProfile& Catalog::profile(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw Error(errc::kUnknownProfile, "unknown MIG profile '" + std::string(name) + "'");
}

Catalog Catalog::restricted_to(const std::vector<std::string>& names) const {
  std::vector<MigProfile> kept;
  for (const auto& n : names) kept.push_back(profile(n));
  return Catalog(gpu_, std::move(kept));
}

Catalog load_catalog(const json& doc) {
  if (!doc.is_object()) {
    throw Error(errc::kMalformedDocument, "catalog document must be a JSON object");
  }
  const json& g = detail::require(doc, "gpu", "");
  const json& link = detail::require(g, "c2c_link", "gpu");
  GpuSpec gpu{
      .name = get_string(g, "name", "gpu"),
      .total_sms = get_int(g, "total_sms", "gpu"),
      .compute_slices = get_int(g, "compute_slices", "gpu"),
      .memory_slices = get_int(g, "memory_slices", "gpu"),
      .usable_memory_full = get_bytes(g, "usable_memory_full", "gpu"),
      .nominal_memory = get_bytes(g, "nominal_memory", "gpu"),
      .local_bandwidth_full = get_bandwidth(g, "local_bandwidth_full", "gpu"),
      .power_cap_w = get_number(g, "power_cap", "gpu"),
      .clock_max_mhz = get_number(g, "clock_max", "gpu"),
      .clock_throttled_mhz = get_number(g, "clock_throttled", "gpu"),
      .c2c_link =
          {
              .direct_d2h = get_bandwidth(link, "direct_d2h", "gpu.c2c_link"),
              .direct_h2d = get_bandwidth(link, "direct_h2d", "gpu.c2c_link"),
              .direct_bidir = get_bandwidth(link, "direct_bidir", "gpu.c2c_link"),
              .ce_d2h_per_1g = get_bandwidth(link, "ce_d2h_per_1g", "gpu.c2c_link"),
              .ce_h2d_per_1g = get_bandwidth(link, "ce_h2d_per_1g", "gpu.c2c_link"),
          },
  };

  const json& list = detail::require(doc, "profiles", "");
  if (!list.is_array() || list.empty()) {
    throw Error(errc::kMalformedDocument, "'profiles' must be a non-empty array");
  }
  std::vector<MigProfile> profiles;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& p = list[i];
    const std::string at = "profiles[" + std::to_string(i) + "]";
    MigProfile prof{
        .name = get_string(p, "name", at),
        .max_instances = get_int(p, "max_instances", at),
        .usable_sms = get_int(p, "usable_sms", at),
        .compute_slice_count = get_int(p, "compute_slice_count", at),
        .memory_slice_count = get_int(p, "memory_slice_count", at),
        .usable_memory = get_bytes(p, "usable_memory", at),
        .l2_fraction = Ratio::parse(get_string(p, "l2_fraction", at)),
        .copy_engines = get_int(p, "copy_engines", at),
        .local_bandwidth = get_bandwidth(p, "local_bandwidth", at),
        .note = p.value("note", std::string{}),
    };
    profiles.push_back(std::move(prof));
  }
  return Catalog(std::move(gpu), std::move(profiles));
}

Catalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open catalog file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(errc::kMalformedDocument,
                "catalog '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return load_catalog(doc);
}

json catalog_to_json(const Catalog& catalog) {
  const GpuSpec& g = catalog.gpu();
  const C2CLink& l = g.c2c_link;
  json doc;
  doc["gpu"] = {
      {"name", g.name},
      {"total_sms", g.total_sms},
      {"compute_slices", g.compute_slices},
      {"memory_slices", g.memory_slices},
      {"usable_memory_full", format_bytes(g.usable_memory_full)},
      {"nominal_memory", format_bytes(g.nominal_memory)},
      {"local_bandwidth_full", format_bandwidth(g.local_bandwidth_full)},
      {"power_cap", g.power_cap_w},
      {"clock_max", g.clock_max_mhz},
      {"clock_throttled", g.clock_throttled_mhz},
      {"c2c_link",
       {
           {"direct_d2h", format_bandwidth(l.direct_d2h)},
           {"direct_h2d", format_bandwidth(l.direct_h2d)},
           {"direct_bidir", format_bandwidth(l.direct_bidir)},
           {"ce_d2h_per_1g", format_bandwidth(l.ce_d2h_per_1g)},
           {"ce_h2d_per_1g", format_bandwidth(l.ce_h2d_per_1g)},
       }},
  };
  json profiles = json::array();
  for (const auto& p : catalog.profiles()) {
    json entry = {
        {"name", p.name},
        {"max_instances", p.max_instances},
        {"usable_sms", p.usable_sms},
        {"compute_slice_count", p.compute_slice_count},
        {"memory_slice_count", p.memory_slice_count},
        {"usable_memory", format_bytes(p.usable_memory)},
        {"l2_fraction", p.l2_fraction.str()},
        {"copy_engines", p.copy_engines},
        {"local_bandwidth", format_bandwidth(p.local_bandwidth)},
    };
    if (!p.note.empty()) entry["note"] = p.note;
    profiles.push_back(std::move(entry));
  }
  doc["profiles"] = std::move(profiles);
  return doc;
}

// ---------------------------------------------------------------------------
// Partition plans

PartitionPlan::PartitionPlan(std::vector<PlanEntry> entries) {
  std::sort(entries.begin(), entries.end());
  for (auto& e : entries) {
    if (!entries_.empty() && entries_.back().profile == e.profile) {
      entries_.back().count += e.count;
    } else {
      entries_.push_back(std::move(e));
    }
  }
}

PartitionPlan PartitionPlan::parse(std::string_view text) {
  std::vector<PlanEntry> entries;
  while (!text.empty()) {
    auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) {
      throw Error(errc::kMalformedDocument, "empty entry in plan");
    }
    int count = 1;
    std::string_view name = item;
    auto x = item.find('x');
    if (x != std::string_view::npos && x > 0 &&
        std::all_of(item.begin(), item.begin() + static_cast<std::ptrdiff_t>(x),
                    [](char c) { return c >= '0' && c <= '9'; })) {
      count = parse_int(item.substr(0, x), item);
      name = item.substr(x + 1);
    }
    if (name.empty()) throw Error(errc::kMalformedDocument, "missing profile name in plan");
    entries.push_back({std::string(name), count});
  }
  if (entries.empty()) throw Error(errc::kMalformedDocument, "plan is empty");
  return PartitionPlan(std::move(entries));
}

int PartitionPlan::instance_count() const {
  int n = 0;
  for (const auto& e : entries_) n += e.count;
  return n;
}

std::vector<std::string> PartitionPlan::instances() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    for (int i = 0; i < e.count; ++i) out.push_back(e.profile);
  }
  return out;
}

std::string PartitionPlan::str() const {
  std::string s;
  for (const auto& e : entries_) {
    if (!s.empty()) s += ',';
    s += std::to_string(e.count) + "x" + e.profile;
  }
  return s;
}

PlanTotals plan_totals(const PartitionPlan& plan, const Catalog& catalog) {
  PlanTotals t;
  for (const auto& e : plan.entries()) {
    const MigProfile& p = catalog.profile(e.profile);
    t.compute_slices += e.count * p.compute_slice_count;
    t.memory_slices += e.count * p.memory_slice_count;
    t.usable_sms += e.count * p.usable_sms;
    t.usable_memory += p.usable_memory * e.count;
  }
  return t;
}

Verdict validate_partition(const PartitionPlan& plan, const Catalog& catalog) {
  Verdict v;
  const GpuSpec& gpu = catalog.gpu();
  if (plan.entries().empty()) v.reasons.emplace_back("plan is empty");
  for (const auto& e : plan.entries()) {
    const MigProfile& p = catalog.profile(e.profile);
    if (e.count <= 0) {
      v.reasons.push_back(e.profile + ": instance count must be positive");
    } else if (e.count > p.max_instances) {
      v.reasons.push_back(e.profile + ": " + std::to_string(e.count) +
                          " instances exceed max_instances=" +
                          std::to_string(p.max_instances));
    }
  }
  const PlanTotals t = plan_totals(plan, catalog);
  if (t.compute_slices > gpu.compute_slices) {
    v.reasons.push_back("compute slices " + std::to_string(t.compute_slices) +
                        " exceed " + std::to_string(gpu.compute_slices));
  }
  if (t.memory_slices > gpu.memory_slices) {
    v.reasons.push_back("memory slices " + std::to_string(t.memory_slices) +
                        " exceed " + std::to_string(gpu.memory_slices));
  }
  v.valid = v.reasons.empty();
  return v;
}

std::vector<PartitionPlan> enumerate_partitions(const Catalog& catalog) {
  std::vector<const MigProfile*> order;
  for (const auto& p : catalog.profiles()) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](const MigProfile* a, const MigProfile* b) { return a->name < b->name; });

  const GpuSpec& gpu = catalog.gpu();
  std::vector<PartitionPlan> plans;
  std::vector<PlanEntry> current;
  std::function<void(std::size_t, int, int)> walk = [&](std::size_t i, int cs, int ms) {
    if (i == order.size()) {
      if (!current.empty()) plans.emplace_back(current);
      return;
    }
    walk(i + 1, cs, ms);
    const MigProfile& p = *order[i];
    for (int k = 1; k <= p.max_instances; ++k) {
      int c = cs + k * p.compute_slice_count;
      int m = ms + k * p.memory_slice_count;
      if (c > gpu.compute_slices || m > gpu.memory_slices) break;
      current.push_back({p.name, k});
      walk(i + 1, c, m);
      current.pop_back();
    }
  };
  walk(0, 0, 0);
  std::sort(plans.begin(), plans.end());
  return plans;
}

WasteReport plan_waste(const PartitionPlan& plan, const Catalog& catalog) {
  Verdict v = validate_partition(plan, catalog);
  if (!v.valid) {
    throw Error(errc::kInvalidPlan, "plan '" + plan.str() + "' is invalid", v.reasons);
  }
  const GpuSpec& gpu = catalog.gpu();
  const PlanTotals t = plan_totals(plan, catalog);
  WasteReport w;
  w.wasted_sms = gpu.total_sms - t.usable_sms;
  w.wasted_sm_fraction = static_cast<double>(w.wasted_sms) / gpu.total_sms;
  w.wasted_memory = gpu.usable_memory_full - t.usable_memory;
  w.wasted_memory_fraction = static_cast<double>(w.wasted_memory.count) /
                             static_cast<double>(gpu.usable_memory_full.count);
  return w;
}

int best_case_instances(const MigProfile& profile, const GpuSpec& gpu) {
  return std::min(gpu.compute_slices, gpu.memory_slices / profile.memory_slice_count);
}

WasteReport best_case_waste(const MigProfile& profile, const GpuSpec& gpu) {
  const int n = best_case_instances(profile, gpu);
  WasteReport w;
  w.wasted_sms = std::max(0, gpu.total_sms - n * profile.usable_sms);
  w.wasted_sm_fraction = static_cast<double>(w.wasted_sms) / gpu.total_sms;
  w.wasted_memory = std::max(Bytes{}, gpu.usable_memory_full - profile.usable_memory * n);
  w.wasted_memory_fraction = static_cast<double>(w.wasted_memory.count) /
                             static_cast<double>(gpu.usable_memory_full.count);
  return w;
}

}  // namespace migplan

#include "migplan/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "migplan/catalog.hpp"
#include "migplan/cosharing.hpp"
#include "migplan/error.hpp"
#include "migplan/offload.hpp"
#include "migplan/payloads.hpp"
#include "migplan/probe.hpp"
#include "migplan/report.hpp"
#include "migplan/reward.hpp"
#include "migplan/workload.hpp"

namespace migplan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kModelDefault = " (model default, not a measured value)";

struct Globals {
  std::string catalog_path;
  std::string profiles_path;
  std::string format = "json";
  std::string output_path;
  std::optional<std::int64_t> generated_at;
};

struct Inputs {
  Catalog catalog;
  std::vector<WorkloadProfile> profiles;
};

Catalog load_catalog_for(const Globals& g) {
  std::string path = g.catalog_path;
  if (path.empty()) {
    if (const char* env = std::getenv("MIG_PLANNER_CATALOG"); env != nullptr && *env != '\0') {
      path = env;
    }
  }
  if (path.empty()) return Catalog::builtin();
  return load_catalog_file(path);
}

std::vector<WorkloadProfile> load_profiles_for(const Globals& g) {
  if (g.profiles_path.empty()) return builtin_profiles();
  return load_profiles_file(g.profiles_path);
}

void write_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(errc::kIo, "cannot open '" + tmp.string() + "' for writing");
    f << text;
    f.flush();
    if (!f) throw Error(errc::kIo, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(errc::kIo, "cannot move report into '" + path.string() + "'");
  }
}

std::vector<double> parse_alpha_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw Error(errc::kOutOfRange, "bad alpha '" + item + "' in list '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

double parse_cap(const std::string& text) {
  if (text == "inf" || text == "none") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !(v > 0.0)) {
    throw Error(errc::kOutOfRange, "power cap must be a positive number of watts or 'inf'");
  }
  return v;
}

void print_error(std::ostream& err, const Error& e) {
  json j = {{"error", {{"kind", e.kind()}, {"message", e.what()}, {"reasons", e.reasons()}}}};
  err << canonical_json(j) << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GPU sharing capacity planner: MIG catalog, reward-based placement, "
               "co-run and offload what-if models.",
               "mig-planner"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::int64_t epoch = 0;
  app.add_option("--catalog", g.catalog_path,
                 "Catalog JSON file (default: $MIG_PLANNER_CATALOG, then the built-in catalog)");
  app.add_option("--profiles", g.profiles_path,
                 "Workload profile JSON file (default: the shipped fixtures)");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "table"}))
      ->capture_default_str();
  app.add_option("--output", g.output_path, "Write the report here instead of stdout");
  auto* epoch_opt = app.add_option("--generated-at-epoch", epoch,
                                   "Fixed report timestamp in Unix seconds");

  // catalog
  auto* cat = app.add_subcommand("catalog", "Show the MIG profiles and their best-case waste");
  bool dump = false;
  cat->add_flag("--dump", dump, "Print the catalog document itself (reloadable with --catalog)");

  // validate
  auto* val = app.add_subcommand("validate", "Check a partition plan and report its waste");
  std::string plan_text;
  bool enumerate = false;
  auto* plan_opt = val->add_option("--plan", plan_text, "Plan, e.g. 4g.48gb,3x1g.12gb");
  auto* enum_opt = val->add_flag("--enumerate", enumerate, "List every valid plan");
  plan_opt->excludes(enum_opt);

  // probe
  auto* prb = app.add_subcommand("probe", "Run the SM-count probe against simulated devices");
  std::optional<int> n_sm;
  double delta_t_ms = 10.0;
  double noise = 0.0;
  std::uint64_t seed = 0x5eed;
  int repeats = 5;
  bool all_profiles = false;
  prb->add_option("--n-sm", n_sm, "SM count of an ad-hoc simulated device");
  prb->add_option("--delta-t-ms", delta_t_ms, "Duration of one wave in milliseconds")
      ->capture_default_str();
  prb->add_option("--noise", noise, "Uniform relative timing noise, e.g. 0.1")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  prb->add_option("--seed", seed, "Noise generator seed")->capture_default_str();
  prb->add_option("--repeats", repeats, "Launches per point; the median is used")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  prb->add_flag("--all-profiles", all_profiles,
                "Probe one simulated device per catalog profile (default without --n-sm)");

  // recommend
  auto* rec = app.add_subcommand("recommend", "Rank configurations for a workload by reward");
  std::string workload;
  double alpha = 0.0;
  bool offload = false;
  rec->add_option("--workload", workload, "Workload name")->required();
  rec->add_option("--alpha", alpha, "Performance weight; 0 ranks by utilisation alone")
      ->capture_default_str();
  rec->add_flag("--offload", offload, "Also consider offload configs for oversized footprints");

  // sweep
  auto* swp = app.add_subcommand("sweep", "Recommend across a list of alpha values");
  std::string alphas = "0,0.1,0.5,1";
  swp->add_option("--workload", workload, "Workload name")->required();
  swp->add_option("--alphas", alphas, "Comma-separated alpha values")->capture_default_str();
  swp->add_flag("--offload", offload, "Also consider offload configs for oversized footprints");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate concurrent instances under a sharing scheme");
  int count = 7;
  std::string scheme_text = "mig:7x1g.12gb";
  std::string cap_text;
  double step_ms = 1.0;
  double timeline_ms = 20.0;
  TimeSliceScheme ts;
  double quantum_ms = ts.quantum_s * 1e3;
  double switch_ms = ts.context_switch_cost_s * 1e3;
  PowerModel defaults;
  double idle_w = defaults.idle_w;
  SimOptions sim_defaults;
  double interference = sim_defaults.mps_interference;
  std::string timeline_out;
  sim->add_option("--workload", workload, "Workload name")->required();
  sim->add_option("--count", count, "Concurrent instances")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--scheme", scheme_text, "mig:<plan> | mps:<n>x<pct>[,<pct>...] | timeslice")
      ->capture_default_str();
  sim->add_option("--cap", cap_text, "Power cap in watts or 'inf' (default: catalog power cap)");
  sim->add_option("--step-ms", step_ms, "Simulation step in milliseconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--timeline-ms", timeline_ms, "Power timeline sampling interval in milliseconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--quantum-ms", quantum_ms,
                  std::string("Time-slice quantum in milliseconds") + kModelDefault)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--switch-cost-ms", switch_ms,
                  std::string("Time-slice context switch cost in milliseconds") + kModelDefault)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim->add_option("--idle-w", idle_w, std::string("GPU idle power in watts") + kModelDefault)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim->add_option("--mps-interference", interference,
                  std::string("Throughput lost per MPS process when no MPS sample exists") +
                      kModelDefault)
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  sim->add_flag("--offload", offload,
                "Run workloads too large for their MIG instance as offload configs");
  sim->add_option("--timeline-out", timeline_out,
                  "Also write the power timeline CSV (t_ms, power_w, clock_mhz, throttled)");

  // offload-whatif
  auto* off = app.add_subcommand("offload-whatif",
                                 "Estimate an oversized workload on a smaller instance with "
                                 "its excess in host memory");
  std::string mode_text;
  std::optional<double> hot;
  std::string base_profile;
  off->add_option("--workload", workload, "Workload name")->required();
  off->add_option("--profile", base_profile,
                  "Instance to offload from (default: largest profile the footprint overflows)");
  off->add_option("--mode", mode_text, "Link access: direct or ce (copy engine)")
      ->check(CLI::IsMember({"direct", "ce", "copy_engine"}));
  off->add_option("--hot-fraction", hot,
                  std::string("Share of memory traffic that hits spilled data; defaults to the "
                              "spill fraction") + kModelDefault)
      ->check(CLI::Range(0.0, 1.0));
  off->add_option("--alpha", alpha, "Alpha for the reward comparison")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (epoch_opt->count() > 0) {
      g.generated_at = epoch;
    }
    const Format format = parse_format(g.format);
    const Catalog catalog = load_catalog_for(g);
    auto profiles = [&] { return load_profiles_for(g); };

    Report report;
    report.generated_at_epoch =
        g.generated_at.value_or(std::chrono::duration_cast<std::chrono::seconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count());
    std::optional<std::string> raw;
    std::optional<std::string> extra_csv;
    View view;

    if (cat->parsed()) {
      report.command = "catalog";
      if (dump) {
        raw = canonical_json(catalog_to_json(catalog)) + "\n";
      } else {
        view = catalog_view(catalog);
      }
    } else if (val->parsed()) {
      report.command = "validate";
      if (enumerate) {
        view = enumerate_view(catalog);
      } else if (!plan_text.empty()) {
        view = validate_view(PartitionPlan::parse(plan_text), catalog);
      } else {
        throw CLI::RequiredError("--plan or --enumerate");
      }
    } else if (prb->parsed()) {
      report.command = "probe";
      ProbeOptions po;
      po.repeats = repeats;
      if (n_sm && !all_profiles) {
        SimulatedDevice dev(*n_sm, delta_t_ms * 1e-3, noise, seed);
        const int probed = probe_sm_count(dev, po);
        view = probe_view({{"custom", probed, *n_sm, probed == *n_sm}});
        view.payload = {{"rows", view.payload}, {"noise", noise}, {"seed", seed},
                        {"delta_t_ms", delta_t_ms}, {"repeats", repeats}};
      } else {
        view = probe_view(probe_all_profiles(catalog, delta_t_ms * 1e-3));
        view.payload = {{"rows", view.payload}, {"delta_t_ms", delta_t_ms}};
      }
    } else if (rec->parsed()) {
      report.command = "recommend";
      const auto all = profiles();
      const auto& w = find_workload(all, workload);
      const RewardPolicy policy = RewardPolicy::make(alpha);
      view = recommend_view(w.name, alpha, recommend(w, policy, catalog, offload));
      view.payload["offload_considered"] = offload;
      view.payload["alpha_outside_default_range"] = policy.outside_default_range();
    } else if (swp->parsed()) {
      report.command = "sweep";
      const auto all = profiles();
      const auto& w = find_workload(all, workload);
      const auto list = parse_alpha_list(alphas);
      view = sweep_view(w.name, alpha_sweep(w, list, catalog, offload));
      view.payload["offload_considered"] = offload;
    } else if (sim->parsed()) {
      report.command = "simulate";
      const auto all = profiles();
      const auto& w = find_workload(all, workload);
      ts.quantum_s = quantum_ms * 1e-3;
      ts.context_switch_cost_s = switch_ms * 1e-3;
      const SharingScheme scheme = parse_scheme(scheme_text, catalog, ts);
      PowerModel power = PowerModel::from_gpu(catalog.gpu());
      power.idle_w = idle_w;
      if (!cap_text.empty()) power.cap_w = parse_cap(cap_text);
      SimOptions opts;
      opts.step_s = step_ms * 1e-3;
      opts.timeline_interval_s = timeline_ms * 1e-3;
      opts.mps_interference = interference;
      opts.allow_offload = offload;
      const std::vector<CorunGroup> groups{{std::cref(w), count}};
      const CorunReport r = simulate_corun(groups, scheme, catalog, power, opts);
      view = simulate_view(w.name, count, r);
      view.payload["power_cap_w"] = power.cap_w;
      view.payload["idle_w"] = power.idle_w;
      view.payload["step_ms"] = step_ms;
      if (!timeline_out.empty()) extra_csv = render_csv(timeline_table(r));
    } else if (off->parsed()) {
      report.command = "offload-whatif";
      const auto all = profiles();
      const auto& w = find_workload(all, workload);
      std::optional<AccessMode> mode;
      if (!mode_text.empty()) mode = parse_access_mode(mode_text);
      const MigProfile* base = nullptr;
      if (!base_profile.empty()) {
        base = &catalog.profile(base_profile);
      } else {
        const auto cands = offload_candidates(w, catalog);
        if (cands.empty()) {
          throw Error(errc::kNoOffload, "workload '" + w.name +
                                            "' has no undersized profile with a sample, or "
                                            "no profile holds it at all");
        }
        base = &catalog.profile(cands.front().scenario.base.name);
      }
      const auto estimate = degraded_performance(w, OffloadScenario::make(w, *base, mode, hot),
                                                 catalog.gpu().c2c_link);
      const RewardPolicy policy = RewardPolicy::make(alpha);
      Candidate oc{.config = estimate.synthetic_config_name,
                   .usable_sms = base->usable_sms,
                   .usable_memory = base->usable_memory,
                   .occupancy = estimate.occupancy,
                   .rel_perf = estimate.rel_perf / w.sample(kFullConfig).rel_perf,
                   .offload = true};
      const RewardResult off_r = score(oc, w, policy, catalog.gpu());

      // Next-larger plain profile: the smallest sampled profile that holds the footprint.
      const MigProfile* plain = nullptr;
      for (const auto& p : catalog.profiles()) {
        if (w.footprint > p.usable_memory || !w.has(p.name)) continue;
        if (plain == nullptr || p.usable_memory < plain->usable_memory ||
            (p.usable_memory == plain->usable_memory && p.usable_sms < plain->usable_sms)) {
          plain = &p;
        }
      }
      json cmp = {{"alpha", alpha}, {"offload", to_json(off_r)}};
      view.table.header = {"alpha", "config", "w_sm", "w_mem", "rel_perf", "reward"};
      auto row = [&](const RewardResult& r) {
        view.table.rows.push_back({format_number(alpha), r.config, format_number(r.w_sm),
                                   format_number(r.w_mem), format_number(r.rel_perf),
                                   r.unbounded ? "+inf" : format_number(r.reward)});
      };
      row(off_r);
      if (plain != nullptr) {
        const RewardResult plain_r = reward(w, plain->name, policy, catalog);
        cmp["plain"] = to_json(plain_r);
        cmp["winner"] = ranks_before(off_r, plain_r) ? off_r.config : plain_r.config;
        row(plain_r);
      } else {
        cmp["plain"] = nullptr;
        cmp["winner"] = off_r.config;
      }
      view.payload = {{"estimate", to_json(estimate)}, {"comparison", cmp}};
    }

    std::string text;
    if (raw) {
      text = *raw;
    } else {
      report.payload = std::move(view.payload);
      report.table = std::move(view.table);
      text = render(report, format);
    }
    if (extra_csv) write_atomically(timeline_out, *extra_csv);
    if (g.output_path.empty()) {
      out << text;
    } else {
      write_atomically(g.output_path, text);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    print_error(err, e);
    return 1;
  } catch (const json::exception& e) {
    print_error(err, Error(errc::kMalformedDocument, e.what()));
    return 1;
  } catch (const fs::filesystem_error& e) {
    print_error(err, Error(errc::kIo, e.what()));
    return 1;
  }
}

}  // namespace migplan

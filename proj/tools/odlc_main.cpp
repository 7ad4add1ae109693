// odlc: run deferrable-load MPC experiments from a JSON config.
//
//   odlc simulate   --config c.json [--seed N] [--engine valley|qp]
//   odlc mc         --config c.json [--runs M] [--seed N] [--threads K]
//   odlc bounds     --config c.json
//   odlc worst-case --config c.json
//   odlc ingest     --trace trace.csv --slots T [--penetration p]
//
// Files land in --out, else $ODLC_OUTPUT_DIR, else the config's output.dir.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "odlc/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> threads;
  std::optional<std::string> engine;
  std::optional<double> penetration;
  std::optional<std::string> out;
  bool trajectories = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_config = true) {
  auto* cfg = cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (needs_config) cfg->required();
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--engine", o.engine, "valley or qp")->check(CLI::IsMember({"valley", "qp"}));
  cmd->add_option("--penetration", o.penetration, "rescale trace renewables to this share")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("-o,--out", o.out, "output directory");
}

odlc::ExperimentConfig prepare(const Overrides& o) {
  auto config = odlc::load_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (o.runs) config.runs = *o.runs;
  if (o.threads) config.threads = *o.threads;
  if (o.engine) config.engine = odlc::parse_engine(*o.engine);
  if (o.trajectories) config.write_trajectories = true;
  if (o.penetration) {
    if (!config.trace) throw odlc::ConfigError("--penetration needs a trace baseload in the config");
    config.trace->penetration = *o.penetration;
    odlc::resolve_profile(config);
  }
  config.validate();
  return config;
}

std::optional<std::filesystem::path> out_override(const Overrides& o) {
  if (o.out) return std::filesystem::path(*o.out);
  return std::nullopt;
}

void print_summary(const odlc::ExperimentArtifacts& art) {
  const auto& r = art.report;
  if (r.contains("analytic") && !r["analytic"].is_null()) {
    const auto& a = r["analytic"];
    fmt::print("E[V] = {:.6g}   worst case = {:.6g}   90% bound = {:.6g}\n",
               a["expected_variance"].get<double>(), a["worst_case_variance"].get<double>(),
               a["percentile_bound_90"].get<double>());
  }
  if (r.contains("empirical")) {
    const auto& e = r["empirical"];
    fmt::print("mean V = {:.6g} (se {:.2g})   p90 = {:.6g}\n", e["mean"].get<double>(),
               e["mean_std_error"].get<double>(), e["percentiles"]["0.9"].get<double>());
  }
  if (r.contains("worst_case")) {
    const auto& w = r["worst_case"];
    fmt::print("adversarial V = {:.10g}   closed form = {:.10g}   coupled = {:.10g}\n",
               w["simulated_variance"].get<double>(), w["closed_form"].get<double>(),
               w["coupled_closed_form"].get<double>());
  } else if (r.contains("run")) {
    fmt::print("V = {:.10g}\n", r["run"]["variance"].get<double>());
  }
  for (const auto& f : art.files) fmt::print("wrote {}\n", f.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shrinking-horizon control of deferrable loads: simulation and tail bounds"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "one seeded run");
  add_common(simulate, o);
  simulate->add_flag("--trajectories", o.trajectories, "also write trajectories.csv");

  auto* mc = app.add_subcommand("mc", "seeded ensemble, empirical CDF against the bounds");
  add_common(mc, o);
  mc->add_option("--runs", o.runs, "ensemble size")->check(CLI::PositiveNumber);
  mc->add_option("--threads", o.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  mc->add_flag("--trajectories", o.trajectories, "also write trajectories.csv");

  auto* bounds = app.add_subcommand("bounds", "closed-form analytics only");
  add_common(bounds, o);

  auto* worst = app.add_subcommand("worst-case", "adversarial run against the closed form");
  add_common(worst, o);

  auto* ingest = app.add_subcommand("ingest", "validate and resample a load trace");
  add_common(ingest, o, false);
  std::string trace_path;
  std::optional<int> slots;
  ingest->add_option("--trace", trace_path, "trace CSV (slot,baseload_kw,renewable_kw)")
      ->check(CLI::ExistingFile);
  ingest->add_option("--slots", slots, "horizon T")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version keep CLI11's zero; every usage error is a config error.
    const int code = app.exit(e);
    return code == 0 ? 0 : odlc::exit_code(odlc::ErrorCategory::kConfig);
  }

  try {
    if (ingest->parsed()) {
      if (!trace_path.empty()) {
        if (!slots) throw odlc::ConfigError("ingest --trace needs --slots");
        const auto dir = o.out ? std::filesystem::path(*o.out)
                               : odlc::resolve_output_dir(odlc::ExperimentConfig{});
        print_summary(odlc::run_ingest(odlc::read_trace(trace_path), *slots, o.penetration, dir));
        return 0;
      }
      if (o.config.empty()) throw odlc::ConfigError("ingest needs --trace or --config");
      const auto config = prepare(o);
      if (!config.trace) throw odlc::ConfigError("config has no trace to ingest");
      const int T = slots.value_or(config.horizon.T);
      print_summary(odlc::run_ingest(odlc::read_trace(config.trace->path), T,
                                     config.trace->penetration,
                                     odlc::resolve_output_dir(config, out_override(o))));
      return 0;
    }

    odlc::Command command = odlc::Command::kBounds;
    if (simulate->parsed()) command = odlc::Command::kSimulate;
    if (mc->parsed()) command = odlc::Command::kMonteCarlo;
    if (worst->parsed()) command = odlc::Command::kWorstCase;

    const auto config = prepare(o);
    print_summary(odlc::run_experiment(config, command,
                                       odlc::resolve_output_dir(config, out_override(o))));
    return 0;
  } catch (const odlc::Error& e) {
    std::cerr << "odlc: " << odlc::to_string(e.category()) << " error: " << e.what() << '\n';
    return odlc::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "odlc: internal error: " << e.what() << '\n';
    return odlc::exit_code(odlc::ErrorCategory::kInternal);
  }
}

#include "odlc/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "odlc/valley_engine.hpp"

namespace odlc {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kAgreementTol = 1e-9;
constexpr double kBinomialSlack = 3.0;
constexpr double kReportedPercentiles[] = {0.5, 0.9, 0.95, 0.99};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::kInternal, "cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

json lambda1_json(const AnalyticReport& a) {
  return {{"statement", a.lambda1}, {"trace", a.lambda1_trace}, {"used_by_tail_bound", "statement"}};
}

json report_header(const ExperimentConfig& config, Command command, const std::string& digest) {
  return {{"tool", "odlc"},
          {"command", std::string(to_string(command))},
          {"config_digest", digest},
          {"seed", config.seed},
          {"engine", std::string(to_string(config.engine))},
          {"config", to_json(config)}};
}

void attach_analytics(json& report, const std::optional<AnalyticReport>& analytic) {
  if (analytic) {
    report["analytic"] = to_json(*analytic);
    report["lambda1"] = lambda1_json(*analytic);
  } else {
    report["analytic"] = nullptr;
    report["lambda1"] = nullptr;
  }
}

std::optional<AnalyticReport> analytics_for(const SimulationSetup& setup) {
  if (setup.horizon() < 2) return std::nullopt;
  return make_analytic_report(setup.baseload, setup.arrivals);
}

void write_trajectory_rows(std::ostream& out, std::size_t run, std::uint64_t seed,
                           const RunOutcome& outcome) {
  const auto& s = outcome.scenario;
  const auto& tr = outcome.trajectory;
  for (std::size_t k = 0; k < tr.d.size(); ++k) {
    out << run << ',' << seed << ',' << (k + 1) << ',' << format_number(s.e[k]) << ','
        << format_number(s.a[k]) << ',' << format_number(s.realized_baseload[k]) << ','
        << format_number(tr.levels[k]) << ',' << format_number(tr.d[k]) << '\n';
  }
}

constexpr const char* kTrajectoryHeader = "run,seed,slot,e,a,baseload,level,d\n";

json run_json(const RunOutcome& outcome, const SimulationSetup& setup) {
  const auto parts = v_decomposition(outcome.scenario, setup.baseload.filter,
                                     setup.arrivals.lambda, setup.horizon());
  return {{"seed", outcome.scenario.seed},
          {"variance", outcome.trajectory.variance},
          {"negative_deferrable_slots", outcome.trajectory.negative_deferrable_slots},
          {"decomposition",
           {{"v1", parts.v1}, {"v2", parts.v2}, {"cross", parts.cross}, {"total", parts.total()}}},
          {"d", outcome.trajectory.d},
          {"levels", outcome.trajectory.levels},
          {"e", outcome.scenario.e},
          {"a", outcome.scenario.a},
          {"realized_baseload", outcome.scenario.realized_baseload}};
}

double relative_gap(double x, double ref) {
  const double scale = std::max(std::abs(ref), 1e-300);
  return std::abs(x - ref) / scale;
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::kSimulate: return "simulate";
    case Command::kMonteCarlo: return "mc";
    case Command::kBounds: return "bounds";
    case Command::kWorstCase: return "worst-case";
    case Command::kIngest: return "ingest";
  }
  return "unknown";
}

fs::path resolve_output_dir(const ExperimentConfig& config,
                            const std::optional<fs::path>& override_dir) {
  if (override_dir) return *override_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return config.output_dir;
}

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

void write_cdf_csv(std::ostream& out, const CdfTable& cdf, std::string_view digest,
                   std::uint64_t seed) {
  out << "# config_digest=" << digest << " seed=" << seed << '\n';
  out << "v,prob\n";
  for (std::size_t i = 0; i < cdf.values.size(); ++i) {
    out << format_number(cdf.values[i]) << ',' << format_number(cdf.probabilities[i]) << '\n';
  }
}

json to_json(const AnalyticReport& a) {
  json curve = json::array();
  for (const auto& p : a.tail_curve) curve.push_back({{"deviation", p.deviation}, {"bound", p.bound}});
  return {{"expected_variance", a.expected_v},
          {"worst_case_variance", a.worst_case_v},
          {"coupled_worst_case_variance", a.coupled_worst_case_v},
          {"lambda1", a.lambda1},
          {"lambda1_trace", a.lambda1_trace},
          {"variance_upper_bound", a.variance_bound},
          {"percentile_bound_90", a.percentile_bound_90},
          {"tail_curve", std::move(curve)}};
}

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kData: return 3;
    case ErrorCategory::kSolver: return 4;
    case ErrorCategory::kInternal: return 5;
  }
  return 5;
}

ExperimentArtifacts run_experiment(const ExperimentConfig& config, Command command,
                                   const fs::path& out_dir) {
  if (command == Command::kIngest) {
    throw ConfigError("ingest is not an experiment; use run_ingest");
  }
  config.validate();
  const auto setup = make_setup(config);
  const auto& digest = setup.config_digest;
  const auto analytic = analytics_for(setup);

  ExperimentArtifacts art;
  art.report = report_header(config, command, digest);
  attach_analytics(art.report, analytic);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::kInternal, "cannot create " + out_dir.string() + ": " + ec.message());

  switch (command) {
    case Command::kBounds:
      if (!analytic) throw ConfigError("bounds need T >= 2");
      break;

    case Command::kSimulate: {
      const auto outcome = run_single(setup, config.seed, config.engine);
      art.report["run"] = run_json(outcome, setup);
      if (config.write_trajectories) {
        const auto path = out_dir / "trajectories.csv";
        auto out = open_output(path);
        out << "# config_digest=" << digest << " seed=" << config.seed << '\n' << kTrajectoryHeader;
        write_trajectory_rows(out, 0, config.seed, outcome);
        art.files.push_back(path);
      }
      break;
    }

    case Command::kWorstCase: {
      const int T = setup.horizon();
      RunOutcome outcome;
      outcome.scenario = adversarial_scenario(setup.baseload, setup.arrivals, T);
      if (config.engine == Engine::kValley) {
        outcome.trajectory = run_valley_mpc(outcome.scenario, setup.baseload, setup.arrivals);
      } else {
        const auto loads = loads_from_arrivals(outcome.scenario, setup.fleet.devices_per_slot,
                                               setup.fleet.p_max);
        outcome.trajectory =
            run_mpc(loads, outcome.scenario, setup.baseload, setup.arrivals, setup.solver).trajectory;
      }
      const ErrorBounds bounds{config.arrivals.eps1, config.eps2};
      const double closed = worst_case_variance(T, bounds, setup.baseload.filter);
      const double coupled = coupled_worst_case_variance(T, bounds, setup.baseload.filter);
      const double simulated = outcome.trajectory.variance;
      art.report["worst_case"] = {
          {"simulated_variance", simulated},
          {"closed_form", closed},
          {"coupled_closed_form", coupled},
          {"relative_gap_closed_form", relative_gap(simulated, closed)},
          {"relative_gap_coupled", relative_gap(simulated, coupled)},
          {"agrees_with_closed_form", relative_gap(simulated, closed) <= kAgreementTol},
          {"agrees_with_coupled", relative_gap(simulated, coupled) <= kAgreementTol},
          {"tolerance", kAgreementTol}};
      art.report["run"] = run_json(outcome, setup);
      break;
    }

    case Command::kMonteCarlo: {
      const auto ens = run_ensemble(setup, config.runs, config.seed, config.engine, config.threads);
      const auto cdf = empirical_cdf(ens);
      const auto summary = summarize(ens.samples);
      const double M = static_cast<double>(ens.samples.size());

      json percentiles = json::object();
      for (double eta : kReportedPercentiles) {
        percentiles[fmt::format("{}", eta)] = empirical_percentile(ens, eta);
      }
      json empirical = {{"runs", config.runs},
                        {"mean", summary.mean},
                        {"mean_std_error", summary.std_error},
                        {"sample_variance", summary.variance},
                        {"sample_variance_std_error", summary.variance_std_error},
                        {"max", summary.max},
                        {"percentiles", std::move(percentiles)},
                        {"negative_deferrable_slots", ens.negative_deferrable_slots}};
      if (analytic) {
        empirical["cdf_at_percentile_bound_90"] = cdf.at(analytic->percentile_bound_90);
        json checks = json::array();
        for (const auto& p : analytic->tail_curve) {
          if (p.deviation <= 0.0) continue;
          const double freq = exceedance_fraction(ens.samples, analytic->expected_v + p.deviation);
          const double q = std::min(p.bound, 1.0);
          const double slack = kBinomialSlack * std::sqrt(q * (1.0 - q) / M);
          checks.push_back({{"deviation", p.deviation},
                            {"bound", p.bound},
                            {"empirical_exceedance", freq},
                            {"within_bound", freq <= p.bound + slack}});
        }
        empirical["tail_check"] = std::move(checks);
      }
      art.report["empirical"] = std::move(empirical);
      art.report["seeds"] = ens.seeds;

      const auto cdf_path = out_dir / "cdf.csv";
      {
        auto out = open_output(cdf_path);
        write_cdf_csv(out, cdf, digest, config.seed);
      }
      art.files.push_back(cdf_path);
      if (config.write_trajectories) {
        const auto path = out_dir / "trajectories.csv";
        auto out = open_output(path);
        out << "# config_digest=" << digest << " seed=" << config.seed << '\n' << kTrajectoryHeader;
        for (std::size_t i = 0; i < ens.seeds.size(); ++i) {
          write_trajectory_rows(out, i, ens.seeds[i], run_single(setup, ens.seeds[i], config.engine));
        }
        art.files.push_back(path);
      }
      art.cdf = cdf;
      break;
    }

    case Command::kIngest:
      break;
  }

  const auto report_path = out_dir / "report.json";
  write_json(report_path, art.report);
  art.files.insert(art.files.begin(), report_path);
  return art;
}

ExperimentArtifacts run_ingest(const TraceFile& trace, int T, std::optional<double> penetration,
                               const fs::path& out_dir) {
  const auto scaled = penetration ? scale_renewable(trace, *penetration) : trace;
  const auto profile = ingest_trace(scaled, T);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::kInternal, "cannot create " + out_dir.string() + ": " + ec.message());

  ExperimentArtifacts art;
  art.report = {{"tool", "odlc"},
                {"command", "ingest"},
                {"source", trace.source},
                {"rows", trace.rows()},
                {"T", T},
                {"block_size", trace.rows() / static_cast<std::size_t>(T)},
                {"mean_profile", profile}};
  if (penetration) art.report["penetration"] = *penetration;

  const auto profile_path = out_dir / "profile.csv";
  {
    auto out = open_output(profile_path);
    out << "slot,mean_kw\n";
    for (std::size_t k = 0; k < profile.size(); ++k) {
      out << (k + 1) << ',' << format_number(profile[k]) << '\n';
    }
  }
  const auto report_path = out_dir / "report.json";
  write_json(report_path, art.report);
  art.files = {report_path, profile_path};
  return art;
}

}  // namespace odlc

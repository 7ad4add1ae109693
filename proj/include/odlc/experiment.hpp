#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "odlc/analytics.hpp"
#include "odlc/config.hpp"
#include "odlc/errors.hpp"
#include "odlc/montecarlo.hpp"
#include "odlc/trace.hpp"

namespace odlc {

enum class Command { kSimulate, kMonteCarlo, kBounds, kWorstCase, kIngest };

std::string_view to_string(Command command);

/// Name of the environment variable that overrides the output directory.
inline constexpr const char* kOutputDirEnv = "ODLC_OUTPUT_DIR";

/// Explicit override first, then $ODLC_OUTPUT_DIR, then the config value.
std::filesystem::path resolve_output_dir(
    const ExperimentConfig& config,
    const std::optional<std::filesystem::path>& override_dir = std::nullopt);

struct ExperimentArtifacts {
  nlohmann::json report;
  std::optional<CdfTable> cdf;
  std::vector<std::filesystem::path> files;
};

/// Runs one subcommand and writes its files into `out_dir` (created on
/// demand): report.json always, cdf.csv for `mc`, trajectories.csv when the
/// config asks for it. kIngest is handled by run_ingest.
ExperimentArtifacts run_experiment(const ExperimentConfig& config, Command command,
                                   const std::filesystem::path& out_dir);

/// Resamples a trace to T slots and writes profile.csv plus report.json.
ExperimentArtifacts run_ingest(const TraceFile& trace, int T,
                               std::optional<double> penetration,
                               const std::filesystem::path& out_dir);

nlohmann::json to_json(const AnalyticReport& report);

/// Decimal with 17 significant digits.
std::string format_number(double x);

/// `# config_digest=<hex> seed=<n>` then `v,prob` rows.
void write_cdf_csv(std::ostream& out, const CdfTable& cdf, std::string_view digest,
                   std::uint64_t seed);

/// Process exit status per failure category: config 2, data 3, solver 4,
/// internal 5.
int exit_code(ErrorCategory category) noexcept;

}  // namespace odlc

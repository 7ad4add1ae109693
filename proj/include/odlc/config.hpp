#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "odlc/montecarlo.hpp"
#include "odlc/stochastic_models.hpp"

namespace odlc {

inline constexpr int kConfigVersion = 1;

struct TraceSource {
  std::filesystem::path path;
  /// Rescale renewables to this share of mean baseload; unset keeps the file.
  std::optional<double> penetration;
};

/// Parsed experiment description. After load_config the mean profile is
/// always resolved, so `trace` is informational.
struct ExperimentConfig {
  int version = kConfigVersion;
  HorizonConfig horizon;
  std::vector<double> mean_profile;
  std::optional<TraceSource> trace;
  std::vector<double> filter{1.0};
  double sigma = 0.0;
  double eps2 = 0.0;
  ArrivalModel arrivals;
  Engine engine = Engine::kValley;
  FleetOptions fleet;
  SolverOptions solver;
  int runs = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path output_dir = ".";
  bool write_trajectories = false;

  /// Cross-field checks (σ <= ε₂, s <= ε₁, profile length = T, ...).
  void validate() const;
};

/// Builds a config from JSON. Unknown keys anywhere are a ConfigError;
/// relative trace paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Re-reads the trace (if any) with the current penetration and horizon.
void resolve_profile(ExperimentConfig& config);

/// Canonical JSON (resolved profile, sorted keys). Round-trips through
/// parse_config.
nlohmann::json to_json(const ExperimentConfig& config);

/// SHA-256 of the canonical JSON, lowercase hex. Output settings (directory,
/// threads, trajectory flag) are excluded since they do not change results.
std::string config_digest(const ExperimentConfig& config);

SimulationSetup make_setup(const ExperimentConfig& config);

}  // namespace odlc

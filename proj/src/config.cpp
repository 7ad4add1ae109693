#include "odlc/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "odlc/errors.hpp"
#include "odlc/trace.hpp"

namespace odlc {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::string_view where,
                    std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, where));
  }
}

const json& require(const json& obj, std::string_view where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(fmt::format("missing key '{}.{}'", where, key));
  return *it;
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", what));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(fmt::format("'{}' must be finite", what));
  return x;
}

long integer(const json& v, std::string_view what) {
  if (!v.is_number_integer()) throw ConfigError(fmt::format("'{}' must be an integer", what));
  return v.get<long>();
}

bool boolean(const json& v, std::string_view what) {
  if (!v.is_boolean()) throw ConfigError(fmt::format("'{}' must be true or false", what));
  return v.get<bool>();
}

std::vector<double> number_array(const json& v, std::string_view what) {
  if (!v.is_array()) throw ConfigError(fmt::format("'{}' must be an array", what));
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], fmt::format("{}[{}]", what, i)));
  }
  return out;
}

template <typename F>
void optional_key(const json& obj, const char* key, F&& apply) {
  const auto it = obj.find(key);
  if (it != obj.end()) apply(*it);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCategory::kInternal, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (version != kConfigVersion) {
    throw ConfigError(fmt::format("unsupported config version {} (expected {})", version,
                                  kConfigVersion));
  }
  horizon.validate();
  if (static_cast<int>(mean_profile.size()) != horizon.T) {
    throw ConfigError(fmt::format("mean profile has {} slots but T = {}",
                                  mean_profile.size(), horizon.T));
  }
  if (trace && trace->penetration &&
      !(*trace->penetration >= 0.0 && *trace->penetration <= 1.0)) {
    throw ConfigError("penetration must lie in [0, 1]");
  }
  BaseloadModel{mean_profile, CausalFilter(filter), sigma, eps2}.validate();
  arrivals.validate();
  if (fleet.devices_per_slot < 1) throw ConfigError("qp.devices_per_slot must be >= 1");
  if (!(fleet.p_max > 0.0)) throw ConfigError("qp.p_max must be positive");
  solver.validate();
  if (runs < 1) throw ConfigError("ensemble.runs must be >= 1");
  if (threads < 0) throw ConfigError("ensemble.threads must be >= 0");
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc, "config",
                 {"version", "horizon", "baseload", "filter", "baseload_error", "arrivals",
                  "engine", "qp", "ensemble", "output"});
  ExperimentConfig c;
  c.version = static_cast<int>(integer(require(doc, "config", "version"), "version"));
  if (c.version != kConfigVersion) {
    throw ConfigError(fmt::format("unsupported config version {} (expected {})", c.version,
                                  kConfigVersion));
  }

  const auto& horizon = require(doc, "config", "horizon");
  reject_unknown(horizon, "horizon", {"T", "slot_minutes"});
  c.horizon.T = static_cast<int>(integer(require(horizon, "horizon", "T"), "horizon.T"));
  optional_key(horizon, "slot_minutes",
               [&](const json& v) { c.horizon.slot_minutes = number(v, "horizon.slot_minutes"); });

  const auto& baseload = require(doc, "config", "baseload");
  reject_unknown(baseload, "baseload", {"mean_profile", "trace", "penetration"});
  const bool has_profile = baseload.contains("mean_profile");
  const bool has_trace = baseload.contains("trace");
  if (has_profile == has_trace) {
    throw ConfigError("baseload needs exactly one of 'mean_profile' or 'trace'");
  }
  if (has_profile) {
    if (baseload.contains("penetration")) {
      throw ConfigError("'baseload.penetration' only applies to a trace");
    }
    c.mean_profile = number_array(baseload["mean_profile"], "baseload.mean_profile");
  } else {
    const auto& path = baseload["trace"];
    if (!path.is_string()) throw ConfigError("'baseload.trace' must be a path string");
    TraceSource src;
    src.path = std::filesystem::path(path.get<std::string>());
    if (src.path.is_relative()) src.path = base_dir / src.path;
    optional_key(baseload, "penetration",
                 [&](const json& v) { src.penetration = number(v, "baseload.penetration"); });
    c.trace = std::move(src);
  }

  optional_key(doc, "filter", [&](const json& v) { c.filter = number_array(v, "filter"); });

  const auto& err = require(doc, "config", "baseload_error");
  reject_unknown(err, "baseload_error", {"sigma", "eps2"});
  c.sigma = number(require(err, "baseload_error", "sigma"), "baseload_error.sigma");
  c.eps2 = number(require(err, "baseload_error", "eps2"), "baseload_error.eps2");

  const auto& arr = require(doc, "config", "arrivals");
  reject_unknown(arr, "arrivals", {"lambda", "s", "eps1", "allow_negative"});
  c.arrivals.lambda = number(require(arr, "arrivals", "lambda"), "arrivals.lambda");
  c.arrivals.s = number(require(arr, "arrivals", "s"), "arrivals.s");
  c.arrivals.eps1 = number(require(arr, "arrivals", "eps1"), "arrivals.eps1");
  optional_key(arr, "allow_negative", [&](const json& v) {
    c.arrivals.allow_negative = boolean(v, "arrivals.allow_negative");
  });

  optional_key(doc, "engine", [&](const json& v) {
    if (!v.is_string()) throw ConfigError("'engine' must be a string");
    c.engine = parse_engine(v.get<std::string>());
  });

  optional_key(doc, "qp", [&](const json& qp) {
    reject_unknown(qp, "qp", {"devices_per_slot", "p_max", "kkt_tol", "max_iters"});
    optional_key(qp, "devices_per_slot", [&](const json& v) {
      c.fleet.devices_per_slot = static_cast<int>(integer(v, "qp.devices_per_slot"));
    });
    optional_key(qp, "p_max", [&](const json& v) { c.fleet.p_max = number(v, "qp.p_max"); });
    optional_key(qp, "kkt_tol", [&](const json& v) { c.solver.kkt_tol = number(v, "qp.kkt_tol"); });
    optional_key(qp, "max_iters", [&](const json& v) {
      c.solver.max_iters = static_cast<int>(integer(v, "qp.max_iters"));
    });
  });

  optional_key(doc, "ensemble", [&](const json& ens) {
    reject_unknown(ens, "ensemble", {"runs", "seed", "threads"});
    optional_key(ens, "runs", [&](const json& v) { c.runs = static_cast<int>(integer(v, "ensemble.runs")); });
    optional_key(ens, "seed", [&](const json& v) {
      if (!v.is_number_unsigned()) throw ConfigError("'ensemble.seed' must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    });
    optional_key(ens, "threads", [&](const json& v) {
      c.threads = static_cast<int>(integer(v, "ensemble.threads"));
    });
  });

  optional_key(doc, "output", [&](const json& out) {
    reject_unknown(out, "output", {"dir", "trajectories"});
    optional_key(out, "dir", [&](const json& v) {
      if (!v.is_string()) throw ConfigError("'output.dir' must be a string");
      c.output_dir = v.get<std::string>();
    });
    optional_key(out, "trajectories", [&](const json& v) {
      c.write_trajectories = boolean(v, "output.trajectories");
    });
  });

  resolve_profile(c);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

void resolve_profile(ExperimentConfig& config) {
  if (!config.trace) return;
  auto trace = read_trace(config.trace->path);
  if (config.trace->penetration) trace = scale_renewable(std::move(trace), *config.trace->penetration);
  config.mean_profile = ingest_trace(trace, config.horizon.T);
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["version"] = c.version;
  doc["horizon"] = {{"T", c.horizon.T}, {"slot_minutes", c.horizon.slot_minutes}};
  doc["baseload"] = {{"mean_profile", c.mean_profile}};
  doc["filter"] = c.filter;
  doc["baseload_error"] = {{"sigma", c.sigma}, {"eps2", c.eps2}};
  doc["arrivals"] = {{"lambda", c.arrivals.lambda},
                     {"s", c.arrivals.s},
                     {"eps1", c.arrivals.eps1},
                     {"allow_negative", c.arrivals.allow_negative}};
  doc["engine"] = std::string(to_string(c.engine));
  doc["qp"] = {{"devices_per_slot", c.fleet.devices_per_slot},
               {"p_max", c.fleet.p_max},
               {"kkt_tol", c.solver.kkt_tol},
               {"max_iters", c.solver.max_iters}};
  doc["ensemble"] = {{"runs", c.runs}, {"seed", c.seed}, {"threads", c.threads}};
  doc["output"] = {{"dir", c.output_dir.string()}, {"trajectories", c.write_trajectories}};
  return doc;
}

std::string config_digest(const ExperimentConfig& config) {
  auto doc = to_json(config);
  doc.erase("output");
  doc["ensemble"].erase("threads");
  return sha256_hex(doc.dump());
}

SimulationSetup make_setup(const ExperimentConfig& config) {
  SimulationSetup setup;
  setup.baseload = BaseloadModel{config.mean_profile, CausalFilter(config.filter),
                                 config.sigma, config.eps2};
  setup.arrivals = config.arrivals;
  setup.fleet = config.fleet;
  setup.solver = config.solver;
  setup.config_digest = config_digest(config);
  return setup;
}

}  // namespace odlc

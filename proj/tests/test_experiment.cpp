#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "odlc/experiment.hpp"

using namespace odlc;
namespace fs = std::filesystem;

namespace {

const fs::path kData = ODLC_TEST_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("odlc_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("bounds writes only the report") {
  const auto dir = fresh_dir("bounds");
  const auto c = load_config(kData / "small.json");
  const auto art = run_experiment(c, Command::kBounds, dir);
  CHECK(fs::exists(dir / "report.json"));
  CHECK_FALSE(fs::exists(dir / "cdf.csv"));
  CHECK(art.files.size() == 1);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["command"] == "bounds");
  CHECK(report["config_digest"] == config_digest(c));
  CHECK(report["seed"] == 7);
  CHECK(report["lambda1"]["used_by_tail_bound"] == "statement");
  CHECK(report["lambda1"]["statement"].get<double>() >= report["lambda1"]["trace"].get<double>());
  CHECK(report["analytic"]["tail_curve"].size() == 21);
}

TEST_CASE("mc writes one CDF row per run and reproduces byte for byte") {
  auto c = load_config(kData / "small.json");
  c.runs = 300;
  const auto d1 = fresh_dir("mc1");
  const auto d2 = fresh_dir("mc2");
  run_experiment(c, Command::kMonteCarlo, d1);
  run_experiment(c, Command::kMonteCarlo, d2);
  const auto cdf = slurp(d1 / "cdf.csv");
  CHECK(line_count(cdf) == 300 + 2);
  CHECK(cdf.rfind("# config_digest=" + config_digest(c) + " seed=7\nv,prob\n", 0) == 0);
  CHECK(cdf == slurp(d2 / "cdf.csv"));
  CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));

  const auto report = nlohmann::json::parse(slurp(d1 / "report.json"));
  CHECK(report["seeds"].size() == 300);
  CHECK(report["empirical"]["percentiles"].contains("0.9"));
  CHECK(report["empirical"]["tail_check"].size() == 20);
  // The CDF rows carry 17 significant digits and parse back exactly.
  std::istringstream rows(cdf);
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  std::getline(rows, line);
  const double v = std::stod(line.substr(0, line.find(',')));
  CHECK(format_number(v) == line.substr(0, line.find(',')));
}

TEST_CASE("thread count does not change the numbers") {
  auto c = load_config(kData / "small.json");
  c.runs = 200;
  c.threads = 1;
  const auto d1 = fresh_dir("thr1");
  run_experiment(c, Command::kMonteCarlo, d1);
  c.threads = 4;
  const auto d2 = fresh_dir("thr4");
  run_experiment(c, Command::kMonteCarlo, d2);
  CHECK(slurp(d1 / "cdf.csv") == slurp(d2 / "cdf.csv"));
  auto r1 = nlohmann::json::parse(slurp(d1 / "report.json"));
  auto r2 = nlohmann::json::parse(slurp(d2 / "report.json"));
  r1.erase("config");
  r2.erase("config");
  CHECK(r1 == r2);
}

TEST_CASE("worst-case compares the adversarial run with both closed forms") {
  const auto c = load_config(kData / "small.json");
  const auto art = run_experiment(c, Command::kWorstCase, fresh_dir("wc"));
  const auto& w = art.report["worst_case"];
  CHECK(w["relative_gap_coupled"].get<double>() <= 1e-9);
  CHECK(w["agrees_with_coupled"] == true);
  // Both error sources are active here, so the published form sits below.
  CHECK(w["closed_form"].get<double>() < w["simulated_variance"].get<double>());

  auto arrivals_only = c;
  arrivals_only.sigma = arrivals_only.eps2 = 0.0;
  const auto art2 = run_experiment(arrivals_only, Command::kWorstCase, fresh_dir("wc2"));
  CHECK(art2.report["worst_case"]["agrees_with_closed_form"] == true);
}

TEST_CASE("simulate writes trajectories on request") {
  auto c = load_config(kData / "small.json");
  c.write_trajectories = true;
  const auto dir = fresh_dir("sim");
  const auto art = run_experiment(c, Command::kSimulate, dir);
  CHECK(art.report["run"]["d"].size() == 24);
  const auto traj = slurp(dir / "trajectories.csv");
  CHECK(line_count(traj) == 24 + 2);
  CHECK(traj.find("run,seed,slot,e,a,baseload,level,d") != std::string::npos);
  const double v = art.report["run"]["variance"];
  const double total = art.report["run"]["decomposition"]["total"];
  CHECK(v == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("ingest preview") {
  const auto dir = fresh_dir("ingest");
  const auto art = run_ingest(read_trace(kData / "trace.csv"), 24, 0.3, dir);
  CHECK(art.report["block_size"] == 2);
  CHECK(line_count(slurp(dir / "profile.csv")) == 25);
  CHECK_THROWS_AS(run_ingest(read_trace(kData / "trace.csv"), 7, std::nullopt, dir), DataError);
  CHECK_THROWS_AS(read_trace(kData / "bad_trace.csv"), DataError);
}

TEST_CASE("output directory precedence") {
  auto c = load_config(kData / "small.json");
  c.output_dir = "from_config";
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_output_dir(c) == fs::path("from_config"));
  ::setenv(kOutputDirEnv, "from_env", 1);
  CHECK(resolve_output_dir(c) == fs::path("from_env"));
  CHECK(resolve_output_dir(c, fs::path("flag")) == fs::path("flag"));
  ::unsetenv(kOutputDirEnv);
}

TEST_CASE("exit codes and formatting") {
  CHECK(exit_code(ErrorCategory::kConfig) == 2);
  CHECK(exit_code(ErrorCategory::kData) == 3);
  CHECK(exit_code(ErrorCategory::kSolver) == 4);
  CHECK(exit_code(ErrorCategory::kInternal) == 5);
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

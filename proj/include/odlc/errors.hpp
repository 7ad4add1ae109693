#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace odlc {

/// Coarse failure class; the CLI maps each category to its exit status.
enum class ErrorCategory { kConfig, kData, kSolver, kInternal };

const char* to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::kData, what) {}
};

enum class SolverFailure {
  kInfeasible,      // constraint set is empty
  kMaxIterations,   // iteration budget exhausted before the KKT tolerance
  kNonConvergence,  // projection bisection failed to close its bracket
  kEnergyDefect,    // a load finished the horizon with energy left over
};

class SolverError : public Error {
 public:
  SolverError(SolverFailure failure, const std::string& what)
      : Error(ErrorCategory::kSolver, what), failure_(failure) {}

  SolverFailure failure() const noexcept { return failure_; }

 private:
  SolverFailure failure_;
};

/// Wraps an engine failure inside an ensemble with the seed that produced it.
class RunError : public Error {
 public:
  RunError(ErrorCategory category, std::uint64_t seed, const std::string& what)
      : Error(category, what + " (seed " + std::to_string(seed) + ")"),
        seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace odlc

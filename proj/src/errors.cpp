#include "odlc/errors.hpp"

namespace odlc {

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kData:
      return "data";
    case ErrorCategory::kSolver:
      return "solver";
    case ErrorCategory::kInternal:
      return "internal";
  }
  return "internal";
}

}  // namespace odlc

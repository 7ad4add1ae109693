#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace odlc {

/// Rows of `slot,baseload_kw,renewable_kw`.
struct TraceFile {
  std::vector<long> slot;
  std::vector<double> baseload_kw;
  std::vector<double> renewable_kw;
  std::string source;  // for error messages

  std::size_t rows() const noexcept { return slot.size(); }
};

/// Parses and validates a trace. Throws DataError naming the offending line
/// for a bad header, a malformed row, a non-increasing slot index, or a
/// negative power value.
TraceFile parse_trace(std::istream& in, const std::string& source = "<stream>");
TraceFile read_trace(const std::filesystem::path& path);

/// Net baseload b̄(1..T) = baseload - renewable. A trace with N = k·T rows
/// is averaged over consecutive blocks of k rows. Throws DataError when
/// N < T or T does not divide N.
std::vector<double> ingest_trace(const TraceFile& trace, int T);
std::vector<double> ingest_trace(const std::filesystem::path& path, int T);

/// Rescales the renewable column so that its mean is penetration times the
/// mean baseload. Throws DataError when the baseload mean is not positive or
/// a zero renewable column cannot reach a positive penetration.
TraceFile scale_renewable(TraceFile trace, double penetration);

}  // namespace odlc

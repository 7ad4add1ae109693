#include "odlc/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include <fmt/format.h>

#include "odlc/errors.hpp"
#include "odlc/numeric.hpp"

namespace odlc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void fail(const std::string& source, long line, std::string_view what) {
  throw DataError(fmt::format("{}:{}: {}", source, line, what));
}

double mean_of(const std::vector<double>& v) {
  return compensated_sum(v) / static_cast<double>(v.size());
}

}  // namespace

TraceFile parse_trace(std::istream& in, const std::string& source) {
  TraceFile trace;
  trace.source = source;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_fields(body);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "slot" || fields[1] != "baseload_kw" ||
          fields[2] != "renewable_kw") {
        fail(source, line_no, "expected header 'slot,baseload_kw,renewable_kw'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      fail(source, line_no, fmt::format("expected 3 fields, found {}", fields.size()));
    }
    long slot = 0;
    double base = 0.0;
    double renewable = 0.0;
    if (!parse_number(fields[0], slot)) fail(source, line_no, "slot is not an integer");
    if (!parse_number(fields[1], base) || !std::isfinite(base)) {
      fail(source, line_no, "baseload_kw is not a number");
    }
    if (!parse_number(fields[2], renewable) || !std::isfinite(renewable)) {
      fail(source, line_no, "renewable_kw is not a number");
    }
    if (!trace.slot.empty() && slot <= trace.slot.back()) {
      fail(source, line_no, "slot index must be strictly increasing");
    }
    if (base < 0.0 || renewable < 0.0) fail(source, line_no, "negative power value");
    trace.slot.push_back(slot);
    trace.baseload_kw.push_back(base);
    trace.renewable_kw.push_back(renewable);
  }
  if (!header_seen) fail(source, line_no, "empty trace");
  return trace;
}

TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace " + path.string());
  return parse_trace(in, path.string());
}

std::vector<double> ingest_trace(const TraceFile& trace, int T) {
  if (T < 1) throw ConfigError("ingest_trace: T must be >= 1");
  const auto N = trace.rows();
  const auto slots = static_cast<std::size_t>(T);
  if (N < slots) {
    throw DataError(fmt::format("{}: {} rows cannot cover {} slots", trace.source, N, T));
  }
  if (N % slots != 0) {
    throw DataError(fmt::format("{}: {} rows do not split into {} equal blocks",
                                trace.source, N, T));
  }
  const std::size_t block = N / slots;
  std::vector<double> out(slots);
  for (std::size_t t = 0; t < slots; ++t) {
    CompensatedSum acc;
    for (std::size_t r = t * block; r < (t + 1) * block; ++r) {
      acc += trace.baseload_kw[r] - trace.renewable_kw[r];
    }
    out[t] = acc.value() / static_cast<double>(block);
  }
  return out;
}

std::vector<double> ingest_trace(const std::filesystem::path& path, int T) {
  return ingest_trace(read_trace(path), T);
}

TraceFile scale_renewable(TraceFile trace, double penetration) {
  if (!(penetration >= 0.0 && penetration <= 1.0)) {
    throw ConfigError("penetration must lie in [0, 1]");
  }
  if (trace.rows() == 0) throw DataError(trace.source + ": empty trace");
  const double base_mean = mean_of(trace.baseload_kw);
  if (!(base_mean > 0.0)) throw DataError(trace.source + ": mean baseload must be positive");
  const double renewable_mean = mean_of(trace.renewable_kw);
  if (renewable_mean == 0.0) {
    if (penetration > 0.0) {
      throw DataError(trace.source + ": renewable column is zero, cannot reach penetration");
    }
    return trace;
  }
  const double factor = penetration * base_mean / renewable_mean;
  for (double& r : trace.renewable_kw) r *= factor;
  return trace;
}

}  // namespace odlc

#ifndef RISSIM_RECORDS_HPP
#define RISSIM_RECORDS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rissim::harness {

/// One emitted measurement, long-format and plot-ready.
struct RunRecord {
  std::string scenario;
  std::string module;
  std::string scheme;
  std::uint64_t seed = 0;
  int cycle = 0;
  std::string metric;
  double value = 0.0;

  bool operator==(const RunRecord&) const = default;
};

/// Shortest round-trippable decimal form (17 significant digits).
std::string format_value(double v);

/// Fixed header scenario,module,scheme,seed,cycle,metric,value; rows ordered
/// by (seed, cycle) regardless of production order.
void emit_csv(std::span<const RunRecord> records, std::ostream& out);

/// Same records as a JSON array of objects, same ordering.
void emit_json(std::span<const RunRecord> records, std::ostream& out);

/// Write records to <dir>/<basename>.<format>; format is "csv" or "json".
/// Returns the written path.
std::string write_records(std::span<const RunRecord> records, const std::string& dir,
                          const std::string& basename, const std::string& format);

}  // namespace rissim::harness

#endif  // RISSIM_RECORDS_HPP

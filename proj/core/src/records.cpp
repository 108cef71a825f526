#include "rissim/records.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace rissim::harness {

namespace {

std::vector<const RunRecord*> ordered(std::span<const RunRecord> records) {
  std::vector<const RunRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  std::stable_sort(ptrs.begin(), ptrs.end(), [](const RunRecord* a, const RunRecord* b) {
    if (a->seed != b->seed) return a->seed < b->seed;
    return a->cycle < b->cycle;
  });
  return ptrs;
}

}  // namespace

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_csv(std::span<const RunRecord> records, std::ostream& out) {
  out << "scenario,module,scheme,seed,cycle,metric,value\n";
  for (const RunRecord* r : ordered(records)) {
    out << r->scenario << ',' << r->module << ',' << r->scheme << ',' << r->seed << ','
        << r->cycle << ',' << r->metric << ',' << format_value(r->value) << '\n';
  }
}

void emit_json(std::span<const RunRecord> records, std::ostream& out) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const RunRecord* r : ordered(records)) {
    nlohmann::ordered_json obj;
    obj["scenario"] = r->scenario;
    obj["module"] = r->module;
    obj["scheme"] = r->scheme;
    obj["seed"] = r->seed;
    obj["cycle"] = r->cycle;
    obj["metric"] = r->metric;
    // Serialized through the same 17-digit formatter as the CSV so the two
    // formats carry identical values.
    if (std::isfinite(r->value))
      obj["value"] = nlohmann::ordered_json::parse(format_value(r->value));
    else
      obj["value"] = nullptr;
    arr.push_back(std::move(obj));
  }
  out << arr.dump(2) << '\n';
}

std::string write_records(std::span<const RunRecord> records, const std::string& dir,
                          const std::string& basename, const std::string& format) {
  if (format != "csv" && format != "json")
    throw std::invalid_argument("write_records: format must be csv or json");
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / (basename + "." + format);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_records: cannot open " + path.string());
  if (format == "csv")
    emit_csv(records, out);
  else
    emit_json(records, out);
  if (!out) throw std::runtime_error("write_records: write failed for " + path.string());
  return path.string();
}

}  // namespace rissim::harness

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ponos/errors.hpp"

namespace ponos {

// One per-epoch record. Row 0 holds the initial-point metrics; the averages
// are over the epoch's iterations; value/grad eval counters are cumulative.
struct TelemetryRow {
  long epoch = 0;
  double train_loss = 0.0;
  std::optional<double> test_accuracy;
  double avg_step = 0.0;
  double avg_initial_step = 0.0;
  double avg_grad_norm = 0.0;
  long backtracks_total = 0;  // within the epoch
  std::uint64_t value_evals = 0;
  std::uint64_t grad_evals = 0;
  double epoch_seconds = 0.0;

  bool operator==(const TelemetryRow&) const = default;
};

struct RunRecord {
  std::map<std::string, std::string> config;  // fully resolved, incl. defaults
  std::uint64_t seed = 0;
  std::vector<TelemetryRow> epochs;
  std::string error;       // empty when the run completed
  std::string error_kind;  // exception tag for diagnostics

  // Oracle accounting (optimizer-side value evals exclude the telemetry
  // full-batch evaluations, which are tallied separately).
  std::uint64_t total_value_evals = 0;
  std::uint64_t total_grad_evals = 0;
  std::uint64_t telemetry_value_evals = 0;
  std::uint64_t sum_backtracks_plus_one = 0;  // sum over line-search iterations of (l_k + 1)
  long iterations = 0;
  long line_search_iterations = 0;
  long skipped_iterations = 0;

  double final_loss() const { return epochs.empty() ? 0.0 : epochs.back().train_loss; }
  bool ok() const { return error.empty(); }
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline const char* kTelemetryHeader =
    "epoch,train_loss,test_accuracy,avg_step,avg_initial_step,avg_grad_norm,"
    "backtracks_total,value_evals,grad_evals,epoch_seconds";

namespace detail {

// 17 significant digits round-trip a double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string telemetry_csv_line(const TelemetryRow& row) {
  std::ostringstream os;
  os << row.epoch << ',' << detail::format_double(row.train_loss) << ',';
  if (row.test_accuracy) os << detail::format_double(*row.test_accuracy);
  os << ',' << detail::format_double(row.avg_step) << ','
     << detail::format_double(row.avg_initial_step) << ','
     << detail::format_double(row.avg_grad_norm) << ',' << row.backtracks_total << ','
     << row.value_evals << ',' << row.grad_evals << ','
     << detail::format_double(row.epoch_seconds);
  return os.str();
}

inline void write_telemetry_csv(const std::string& path, const std::vector<TelemetryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << kTelemetryHeader << '\n';
  for (const auto& row : rows) out << telemetry_csv_line(row) << '\n';
}

inline std::vector<TelemetryRow> parse_telemetry_csv(std::istream& in) {
  std::vector<TelemetryRow> rows;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTelemetryHeader) throw ParseError(line_no, "unexpected telemetry header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::string tok;
    std::stringstream ss(line);
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (ss.eof() && !line.empty() && line.back() == ',') fields.push_back("");
    if (fields.size() != 10) throw ParseError(line_no, "expected 10 columns");
    TelemetryRow row;
    try {
      row.epoch = std::stol(fields[0]);
      row.train_loss = std::stod(fields[1]);
      if (!fields[2].empty()) row.test_accuracy = std::stod(fields[2]);
      row.avg_step = std::stod(fields[3]);
      row.avg_initial_step = std::stod(fields[4]);
      row.avg_grad_norm = std::stod(fields[5]);
      row.backtracks_total = std::stol(fields[6]);
      row.value_evals = std::stoull(fields[7]);
      row.grad_evals = std::stoull(fields[8]);
      row.epoch_seconds = std::stod(fields[9]);
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
    rows.push_back(row);
  }
  if (!header_seen) throw ParseError(line_no, "missing telemetry header");
  return rows;
}

inline std::vector<TelemetryRow> read_telemetry_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  return parse_telemetry_csv(in);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

// JSON has no literal for non-finite numbers (nlohmann dumps them as null);
// diverged runs legitimately record inf, so those go through as strings.
inline nlohmann::json json_double(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0.0 ? "inf" : "-inf";
}

inline double double_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error("bad numeric string '" + s + "' in record");
  }
  return j.get<double>();
}

inline nlohmann::json to_json(const TelemetryRow& row) {
  nlohmann::json j{{"epoch", row.epoch},
                   {"train_loss", json_double(row.train_loss)},
                   {"avg_step", json_double(row.avg_step)},
                   {"avg_initial_step", json_double(row.avg_initial_step)},
                   {"avg_grad_norm", json_double(row.avg_grad_norm)},
                   {"backtracks_total", row.backtracks_total},
                   {"value_evals", row.value_evals},
                   {"grad_evals", row.grad_evals},
                   {"epoch_seconds", row.epoch_seconds}};
  if (row.test_accuracy) j["test_accuracy"] = json_double(*row.test_accuracy);
  return j;
}

inline TelemetryRow telemetry_row_from_json(const nlohmann::json& j) {
  TelemetryRow row;
  row.epoch = j.at("epoch").get<long>();
  row.train_loss = double_from_json(j.at("train_loss"));
  if (j.contains("test_accuracy")) row.test_accuracy = double_from_json(j.at("test_accuracy"));
  row.avg_step = double_from_json(j.at("avg_step"));
  row.avg_initial_step = double_from_json(j.at("avg_initial_step"));
  row.avg_grad_norm = double_from_json(j.at("avg_grad_norm"));
  row.backtracks_total = j.at("backtracks_total").get<long>();
  row.value_evals = j.at("value_evals").get<std::uint64_t>();
  row.grad_evals = j.at("grad_evals").get<std::uint64_t>();
  row.epoch_seconds = j.at("epoch_seconds").get<double>();
  return row;
}

inline nlohmann::json to_json(const RunRecord& record) {
  nlohmann::json j;
  j["config"] = record.config;
  j["seed"] = record.seed;
  j["iterations"] = record.iterations;
  j["line_search_iterations"] = record.line_search_iterations;
  j["skipped_iterations"] = record.skipped_iterations;
  j["total_value_evals"] = record.total_value_evals;
  j["total_grad_evals"] = record.total_grad_evals;
  j["telemetry_value_evals"] = record.telemetry_value_evals;
  j["sum_backtracks_plus_one"] = record.sum_backtracks_plus_one;
  if (!record.error.empty()) {
    j["error"] = record.error;
    j["error_kind"] = record.error_kind;
  }
  j["final_loss"] = json_double(record.final_loss());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : record.epochs) rows.push_back(to_json(row));
  j["epochs"] = rows;
  return j;
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
  RunRecord record;
  record.config = j.at("config").get<std::map<std::string, std::string>>();
  record.seed = j.at("seed").get<std::uint64_t>();
  record.iterations = j.at("iterations").get<long>();
  record.line_search_iterations = j.at("line_search_iterations").get<long>();
  record.skipped_iterations = j.at("skipped_iterations").get<long>();
  record.total_value_evals = j.at("total_value_evals").get<std::uint64_t>();
  record.total_grad_evals = j.at("total_grad_evals").get<std::uint64_t>();
  record.telemetry_value_evals = j.at("telemetry_value_evals").get<std::uint64_t>();
  record.sum_backtracks_plus_one = j.at("sum_backtracks_plus_one").get<std::uint64_t>();
  if (j.contains("error")) {
    record.error = j.at("error").get<std::string>();
    record.error_kind = j.value("error_kind", std::string{});
  }
  for (const auto& row : j.at("epochs")) record.epochs.push_back(telemetry_row_from_json(row));
  return record;
}

}  // namespace ponos

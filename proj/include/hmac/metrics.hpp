#pragma once

// Per-class run counters, the derived throughput / delivery-ratio figures,
// run comparisons and CSV / JSON serialization.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmac/types.hpp"

namespace hmac {

struct ClassMetrics {
  std::int64_t generated = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped_expired = 0;
  std::int64_t dropped_retry = 0;
  std::int64_t dropped_tail = 0;
  std::int64_t bits_delivered = 0;
  std::int64_t collisions = 0;
  std::int64_t transmissions = 0;
  std::int64_t sum_end_to_end_delay = 0;  // ticks, delivered packets only

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct RunMetrics {
  Protocol protocol = Protocol::edca;
  int node_count = 0;
  int scenario = 1;
  std::uint64_t seed = 0;
  PerClass<ClassMetrics> classes{};
  double measured_a_col = 0.0;
  Tick wall_duration = 0;
  double tick_seconds = 1e-6;
  bool scenario_target_met = true;
  // Packets still queued or on the air at the end of the run. Not serialized.
  PerClass<std::int64_t> in_flight{};
};

class RateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ComparisonError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Delivered bits per second. Throws RateError for a zero duration.
double throughput(const ClassMetrics& m, Tick duration, double tick_seconds = 1e-6);

/// Delivered / generated; empty when nothing was generated.
std::optional<double> pdr(const ClassMetrics& m);

double aggregate_throughput(const RunMetrics& run);
double class_throughput(const RunMetrics& run, int cls);
std::optional<double> mean_delay_ticks(const ClassMetrics& m);

/// A class is starved when it receives under this share of the aggregate.
inline constexpr double kStarvationShare = 0.01;

struct Comparison {
  double aggregate_a = 0.0;
  double aggregate_b = 0.0;
  double improvement_pct = 0.0;     // (a / b - 1) * 100
  PerClass<double> class_delta{};   // a - b, bits/s
  PerClass<bool> starved_a{};
  PerClass<bool> starved_b{};
};

PerClass<bool> starvation_flags(const PerClass<double>& class_throughput);

/// Compares run `a` against baseline `b`. Both must share node count and scenario.
Comparison compare(const RunMetrics& a, const RunMetrics& b);

enum class OutputFormat { csv, json };

inline constexpr const char* kRunCsvHeader =
    "protocol,scenario,node_count,seed,class,generated,delivered,dropped_expired,dropped_retry,"
    "dropped_tail,bits_delivered,throughput_bps,pdr,collisions,transmissions,a_col,mean_delay_ticks";

/// Rows are ordered by (protocol, scenario, node_count, seed, class).
std::string to_csv(std::vector<RunMetrics> runs);
std::string to_json(std::vector<RunMetrics> runs);

/// Writes runs in the requested format. Throws std::runtime_error naming the path on failure.
void emit(const std::vector<RunMetrics>& runs, OutputFormat format, const std::filesystem::path& path);

/// One parsed CSV data row.
struct RunRow {
  std::string protocol;
  int scenario = 0;
  int node_count = 0;
  std::uint64_t seed = 0;
  std::string cls;
  ClassMetrics metrics;
  double throughput_bps = 0.0;
  std::optional<double> pdr;
  double a_col = 0.0;
  std::optional<double> mean_delay_ticks;
};

std::vector<RunRow> parse_run_csv(const std::string& text);

/// Shortest decimal text that reads back to exactly `v`.
std::string format_double(double v);

}  // namespace hmac

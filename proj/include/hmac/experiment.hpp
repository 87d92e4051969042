#pragma once

// Experiment driver: protocol x scenario x node-count sweeps with seed
// replication, seed-averaged summaries and H-MAC vs EDCA comparisons.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmac/config.hpp"
#include "hmac/metrics.hpp"

namespace hmac {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by parse_args for --help; carries the usage text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentPlan {
  std::vector<Protocol> protocols{Protocol::edca, Protocol::hmac};
  std::vector<int> scenarios{1, 2};
  std::vector<int> node_counts{5, 10, 25, 50, 100};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::map<std::string, std::string> overrides;  // applied onto every SimConfig
  std::filesystem::path out_dir = "results";
  OutputFormat format = OutputFormat::csv;
  bool trace = false;
  unsigned jobs = 0;  // 0: hardware concurrency

  std::size_t run_count() const {
    return protocols.size() * scenarios.size() * node_counts.size() * seeds.size();
  }
  /// Configurations in output order (protocol, scenario, node_count, seed).
  std::vector<SimConfig> configs() const;
};

ExperimentPlan parse_args(int argc, const char* const* argv);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 with fewer than two values
  std::size_t n = 0;
};

Stat mean_sd(const std::vector<double>& values);

struct SummaryRow {
  Protocol protocol = Protocol::edca;
  int scenario = 1;
  int node_count = 0;
  int cls = 0;
  Stat throughput;
  Stat pdr;
  Stat a_col;
  bool target_unmet = false;
};

struct ComparisonRow {
  int scenario = 1;
  int node_count = 0;
  double hmac_aggregate = 0.0;
  double edca_aggregate = 0.0;
  double improvement_pct = 0.0;
  PerClass<double> class_delta{};
  PerClass<bool> hmac_starved{};
  PerClass<bool> edca_starved{};
};

std::vector<SummaryRow> summarize(const std::vector<RunMetrics>& runs);
std::vector<ComparisonRow> compare_protocols(const std::vector<SummaryRow>& summary);

inline constexpr const char* kSummaryCsvHeader =
    "protocol,scenario,node_count,class,seeds,throughput_mean_bps,throughput_sd_bps,pdr_mean,pdr_sd,"
    "a_col_mean,a_col_sd,target_unmet";
inline constexpr const char* kComparisonCsvHeader =
    "scenario,node_count,hmac_aggregate_bps,edca_aggregate_bps,improvement_pct,delta_UP_bps,"
    "delta_HP_bps,delta_MP_bps,delta_LP_bps,hmac_starved,edca_starved";

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

std::string run_id(const RunMetrics& run);

struct ExecuteResult {
  int exit_code = 0;
  std::vector<RunMetrics> runs;
  std::vector<SummaryRow> summary;
  std::vector<ComparisonRow> comparison;
  std::vector<std::string> failures;
};

/// Runs every cell of the plan, writes the output directory and prints a
/// summary table to `log`. Run failures are reported and yield a nonzero exit
/// code once every other run has finished.
ExecuteResult execute(const ExperimentPlan& plan, std::ostream& log);

}  // namespace hmac

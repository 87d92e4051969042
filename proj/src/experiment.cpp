#include "hmac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "CLI11.hpp"
#include "hmac/simulator.hpp"

namespace hmac {

std::vector<SimConfig> ExperimentPlan::configs() const {
  SimConfig base;
  apply_overrides(base, overrides);
  std::vector<SimConfig> out;
  out.reserve(run_count());
  auto protos = protocols;
  std::sort(protos.begin(), protos.end());
  for (Protocol p : protos) {
    for (int s : scenarios) {
      for (int n : node_counts) {
        for (std::uint64_t seed : seeds) {
          SimConfig c = base;
          c.protocol = p;
          c.scenario = s;
          c.node_count = n;
          c.seed = seed;
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Protocol> parse_protocols(const std::vector<std::string>& items) {
  std::vector<Protocol> out;
  for (const auto& item : items) {
    if (item == "edca") {
      out.push_back(Protocol::edca);
    } else if (item == "hmac") {
      out.push_back(Protocol::hmac);
    } else if (item == "both") {
      out.push_back(Protocol::edca);
      out.push_back(Protocol::hmac);
    } else {
      throw UsageError("unknown protocol '" + item + "' (expected edca, hmac or both)");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <class T>
std::vector<T> parse_numbers(const std::vector<std::string>& items, const char* what) {
  std::vector<T> out;
  for (const auto& item : items) {
    T v{};
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError(std::string("invalid ") + what + " '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> flatten(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& r : raw) {
    for (auto& s : split(r)) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ExperimentPlan parse_args(int argc, const char* const* argv) {
  CLI::App app{"H-MAC / EDCA wireless MAC experiment driver", "hmac_sim"};
  std::vector<std::string> protocols, scenarios, nodes, seed_list;
  int seeds = 0;
  Tick duration = -1;
  std::string config_file, out_dir, format = "csv";
  bool trace = false;
  unsigned jobs = 0;

  app.add_option("--protocol", protocols, "edca, hmac, both or a comma list");
  app.add_option("--scenario", scenarios, "1, 2 or a comma list");
  app.add_option("--nodes", nodes, "comma list of node counts");
  auto* seeds_opt = app.add_option("--seeds", seeds, "number of seeds (1..N)");
  auto* list_opt = app.add_option("--seed-list", seed_list, "explicit comma list of seeds");
  seeds_opt->excludes(list_opt);
  auto* duration_opt = app.add_option("--duration", duration, "simulated ticks (microseconds) per run");
  app.add_option("--config", config_file, "flat key=value configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--trace", trace, "write per-event trace files");
  app.add_option("--jobs", jobs, "concurrent runs (default: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  ExperimentPlan plan;
  std::map<std::string, std::string> file_values;
  if (!config_file.empty()) {
    try {
      file_values = parse_key_values(read_file(config_file));
    } catch (const ConfigError& e) {
      throw UsageError(config_file + ": " + e.what());
    }
  }

  // Sweep keys in the file seed the plan; flags given on the command line win.
  auto take = [&file_values](const std::string& key) -> std::optional<std::string> {
    auto it = file_values.find(key);
    if (it == file_values.end()) return std::nullopt;
    std::string v = it->second;
    file_values.erase(it);
    return v;
  };
  const auto file_protocol = take("protocol");
  const auto file_scenario = take("scenario");
  const auto file_nodes = take("node_count");
  const auto file_seed = take("seed");

  if (!protocols.empty()) {
    plan.protocols = parse_protocols(flatten(protocols));
  } else if (file_protocol) {
    plan.protocols = parse_protocols(split(*file_protocol));
  }
  if (!scenarios.empty()) {
    plan.scenarios = parse_numbers<int>(flatten(scenarios), "scenario");
  } else if (file_scenario) {
    plan.scenarios = parse_numbers<int>(split(*file_scenario), "scenario");
  }
  if (!nodes.empty()) {
    plan.node_counts = parse_numbers<int>(flatten(nodes), "node count");
  } else if (file_nodes) {
    plan.node_counts = parse_numbers<int>(split(*file_nodes), "node count");
  }
  if (seeds_opt->count() > 0) {
    if (seeds < 1) throw UsageError("--seeds must be at least 1");
    plan.seeds.clear();
    for (int i = 1; i <= seeds; ++i) plan.seeds.push_back(static_cast<std::uint64_t>(i));
  } else if (!seed_list.empty()) {
    plan.seeds = parse_numbers<std::uint64_t>(flatten(seed_list), "seed");
  } else if (file_seed) {
    plan.seeds = parse_numbers<std::uint64_t>(split(*file_seed), "seed");
  }

  plan.overrides = std::move(file_values);
  if (duration_opt->count() > 0) {
    if (duration < 0) throw UsageError("--duration must be non-negative");
    plan.overrides["duration"] = std::to_string(duration);
  }
  if (!out_dir.empty()) plan.out_dir = out_dir;
  plan.format = format == "json" ? OutputFormat::json : OutputFormat::csv;
  plan.trace = trace;
  plan.jobs = jobs;

  if (plan.protocols.empty() || plan.scenarios.empty() || plan.node_counts.empty() || plan.seeds.empty()) {
    throw UsageError("protocols, scenarios, node counts and seeds must all be non-empty");
  }
  for (int s : plan.scenarios) {
    if (s != 1 && s != 2) throw UsageError("scenario must be 1 or 2, got " + std::to_string(s));
  }
  for (int n : plan.node_counts) {
    if (n < 2) throw UsageError("node count must be at least 2, got " + std::to_string(n));
  }
  try {
    SimConfig probe;
    apply_overrides(probe, plan.overrides);
    probe.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return plan;
}

Stat mean_sd(const std::vector<double>& values) {
  Stat s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunMetrics>& runs) {
  using Key = std::tuple<int, int, int>;
  std::map<Key, std::vector<const RunMetrics*>> cells;
  for (const auto& r : runs) {
    cells[{static_cast<int>(r.protocol), r.scenario, r.node_count}].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : cells) {
    bool unmet = false;
    std::vector<double> a_col;
    for (const auto* r : members) {
      unmet = unmet || !r->scenario_target_met;
      a_col.push_back(r->measured_a_col);
    }
    for (int c = 0; c < kNumClasses; ++c) {
      SummaryRow row;
      row.protocol = static_cast<Protocol>(std::get<0>(key));
      row.scenario = std::get<1>(key);
      row.node_count = std::get<2>(key);
      row.cls = c;
      std::vector<double> tp, ratio;
      for (const auto* r : members) {
        tp.push_back(class_throughput(*r, c));
        if (auto v = pdr(r->classes[c])) ratio.push_back(*v);
      }
      row.throughput = mean_sd(tp);
      row.pdr = mean_sd(ratio);
      row.a_col = mean_sd(a_col);
      row.target_unmet = unmet;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ComparisonRow> compare_protocols(const std::vector<SummaryRow>& summary) {
  using Key = std::pair<int, int>;
  std::map<Key, PerClass<double>> hmac_tp, edca_tp;
  for (const auto& row : summary) {
    auto& target = row.protocol == Protocol::hmac ? hmac_tp : edca_tp;
    target[{row.scenario, row.node_count}][row.cls] = row.throughput.mean;
  }
  std::vector<ComparisonRow> rows;
  for (const auto& [key, h] : hmac_tp) {
    auto it = edca_tp.find(key);
    if (it == edca_tp.end()) continue;
    const auto& e = it->second;
    ComparisonRow row;
    row.scenario = key.first;
    row.node_count = key.second;
    for (int c = 0; c < kNumClasses; ++c) {
      row.hmac_aggregate += h[c];
      row.edca_aggregate += e[c];
      row.class_delta[c] = h[c] - e[c];
    }
    if (row.edca_aggregate > 0.0) row.improvement_pct = (row.hmac_aggregate / row.edca_aggregate - 1.0) * 100.0;
    row.hmac_starved = starvation_flags(h);
    row.edca_starved = starvation_flags(e);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string starved_list(const PerClass<bool>& flags) {
  std::string out;
  for (int c = 0; c < kNumClasses; ++c) {
    if (!flags[c]) continue;
    if (!out.empty()) out += '|';
    out += class_name(c);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << kSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    out << protocol_name(r.protocol) << ',' << r.scenario << ',' << r.node_count << ',' << class_name(r.cls)
        << ',' << r.throughput.n << ',' << format_double(r.throughput.mean) << ','
        << format_double(r.throughput.sd) << ',';
    if (r.pdr.n > 0) out << format_double(r.pdr.mean) << ',' << format_double(r.pdr.sd);
    else out << ',';
    out << ',' << format_double(r.a_col.mean) << ',' << format_double(r.a_col.sd) << ','
        << (r.target_unmet ? "scenario target unmet" : "") << '\n';
  }
  return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << kComparisonCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.node_count << ',' << format_double(r.hmac_aggregate) << ','
        << format_double(r.edca_aggregate) << ',' << format_double(r.improvement_pct);
    for (double d : r.class_delta) out << ',' << format_double(d);
    out << ',' << starved_list(r.hmac_starved) << ',' << starved_list(r.edca_starved) << '\n';
  }
  return out.str();
}

std::string run_id(const RunMetrics& run) {
  return std::string(protocol_name(run.protocol)) + "-s" + std::to_string(run.scenario) + "-n" +
         std::to_string(run.node_count) + "-seed" + std::to_string(run.seed);
}

ExecuteResult execute(const ExperimentPlan& plan, std::ostream& log) {
  ExecuteResult result;
  const std::vector<SimConfig> configs = plan.configs();
  std::vector<std::optional<RunMetrics>> slots(configs.size());
  std::vector<std::string> errors(configs.size());

  std::filesystem::create_directories(plan.out_dir);
  if (plan.trace) std::filesystem::create_directories(plan.out_dir / "trace");

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        const SimConfig& c = configs[i];
        if (plan.trace) {
          RunMetrics probe;
          probe.protocol = c.protocol;
          probe.scenario = c.scenario;
          probe.node_count = c.node_count;
          probe.seed = c.seed;
          std::ofstream trace_file(plan.out_dir / "trace" / (run_id(probe) + ".log"));
          slots[i] = run(c, &trace_file);
        } else {
          slots[i] = run(c);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned jobs = plan.jobs > 0 ? plan.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, configs.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (slots[i]) {
      result.runs.push_back(std::move(*slots[i]));
    } else {
      const auto& c = configs[i];
      result.failures.push_back(std::string(protocol_name(c.protocol)) + " scenario " +
                                std::to_string(c.scenario) + " nodes " + std::to_string(c.node_count) +
                                " seed " + std::to_string(c.seed) + ": " + errors[i]);
    }
  }
  result.summary = summarize(result.runs);
  result.comparison = compare_protocols(result.summary);

  const auto runs_path = plan.out_dir / (plan.format == OutputFormat::csv ? "runs.csv" : "runs.json");
  emit(result.runs, plan.format, runs_path);
  write_text(plan.out_dir / "summary.csv", summary_csv(result.summary));
  write_text(plan.out_dir / "comparison.csv", comparison_csv(result.comparison));

  char line[256];
  log << "protocol scenario nodes class   throughput_bps       pdr   a_col\n";
  for (const auto& r : result.summary) {
    std::snprintf(line, sizeof line, "%-8s %8d %5d %-5s %16.1f %9.4f %7.4f%s\n", protocol_name(r.protocol),
                  r.scenario, r.node_count, class_name(r.cls), r.throughput.mean, r.pdr.mean, r.a_col.mean,
                  r.target_unmet ? "  [scenario target unmet]" : "");
    log << line;
  }
  for (const auto& c : result.comparison) {
    std::snprintf(line, sizeof line, "scenario %d nodes %3d: hmac %.1f bps vs edca %.1f bps (%+.1f%%)\n",
                  c.scenario, c.node_count, c.hmac_aggregate, c.edca_aggregate, c.improvement_pct);
    log << line;
  }
  for (const auto& f : result.failures) log << "run failed: " << f << '\n';
  result.exit_code = result.failures.empty() ? 0 : 1;
  return result;
}

}  // namespace hmac

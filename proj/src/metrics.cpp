#include "hmac/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace hmac {

double throughput(const ClassMetrics& m, Tick duration, double tick_seconds) {
  if (duration <= 0) throw RateError("throughput is undefined over a zero-length run");
  return static_cast<double>(m.bits_delivered) / (static_cast<double>(duration) * tick_seconds);
}

std::optional<double> pdr(const ClassMetrics& m) {
  if (m.generated <= 0) return std::nullopt;
  return static_cast<double>(m.delivered) / static_cast<double>(m.generated);
}

double class_throughput(const RunMetrics& run, int cls) {
  if (run.wall_duration <= 0) return 0.0;
  return throughput(run.classes[cls], run.wall_duration, run.tick_seconds);
}

double aggregate_throughput(const RunMetrics& run) {
  double total = 0.0;
  for (int i = 0; i < kNumClasses; ++i) total += class_throughput(run, i);
  return total;
}

std::optional<double> mean_delay_ticks(const ClassMetrics& m) {
  if (m.delivered <= 0) return std::nullopt;
  return static_cast<double>(m.sum_end_to_end_delay) / static_cast<double>(m.delivered);
}

PerClass<bool> starvation_flags(const PerClass<double>& class_tp) {
  PerClass<bool> flags{};
  double total = 0.0;
  for (double t : class_tp) total += t;
  for (int i = 0; i < kNumClasses; ++i) flags[i] = class_tp[i] < kStarvationShare * total;
  return flags;
}

Comparison compare(const RunMetrics& a, const RunMetrics& b) {
  if (a.node_count != b.node_count || a.scenario != b.scenario) {
    throw ComparisonError("cannot compare runs with different node counts or scenarios");
  }
  Comparison c;
  PerClass<double> ta{}, tb{};
  for (int i = 0; i < kNumClasses; ++i) {
    ta[i] = class_throughput(a, i);
    tb[i] = class_throughput(b, i);
    c.class_delta[i] = ta[i] - tb[i];
  }
  c.aggregate_a = aggregate_throughput(a);
  c.aggregate_b = aggregate_throughput(b);
  if (c.aggregate_b > 0.0) {
    c.improvement_pct = (c.aggregate_a / c.aggregate_b - 1.0) * 100.0;
  } else if (c.aggregate_a > 0.0) {
    c.improvement_pct = 100.0;
  }
  c.starved_a = starvation_flags(ta);
  c.starved_b = starvation_flags(tb);
  return c;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

void sort_runs(std::vector<RunMetrics>& runs) {
  std::stable_sort(runs.begin(), runs.end(), [](const RunMetrics& a, const RunMetrics& b) {
    return std::make_tuple(static_cast<int>(a.protocol), a.scenario, a.node_count, a.seed) <
           std::make_tuple(static_cast<int>(b.protocol), b.scenario, b.node_count, b.seed);
  });
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

template <class T>
T parse_number(const std::string& field, const char* column) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error(std::string("malformed ") + column + " value '" + field + "'");
  }
  return value;
}

std::optional<double> parse_opt(const std::string& field, const char* column) {
  if (field.empty()) return std::nullopt;
  return parse_number<double>(field, column);
}

}  // namespace

std::string to_csv(std::vector<RunMetrics> runs) {
  sort_runs(runs);
  std::ostringstream out;
  out << kRunCsvHeader << '\n';
  for (const auto& run : runs) {
    for (int i = 0; i < kNumClasses; ++i) {
      const auto& m = run.classes[i];
      out << protocol_name(run.protocol) << ',' << run.scenario << ',' << run.node_count << ','
          << run.seed << ',' << class_name(i) << ',' << m.generated << ',' << m.delivered << ','
          << m.dropped_expired << ',' << m.dropped_retry << ',' << m.dropped_tail << ','
          << m.bits_delivered << ',' << format_double(class_throughput(run, i)) << ','
          << opt(pdr(m)) << ',' << m.collisions << ',' << m.transmissions << ','
          << format_double(run.measured_a_col) << ',' << opt(mean_delay_ticks(m)) << '\n';
    }
  }
  return out.str();
}

std::string to_json(std::vector<RunMetrics> runs) {
  sort_runs(runs);
  auto rows = nlohmann::ordered_json::array();
  auto optional_json = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  for (const auto& run : runs) {
    for (int i = 0; i < kNumClasses; ++i) {
      const auto& m = run.classes[i];
      nlohmann::ordered_json row;
      row["protocol"] = protocol_name(run.protocol);
      row["scenario"] = run.scenario;
      row["node_count"] = run.node_count;
      row["seed"] = run.seed;
      row["class"] = class_name(i);
      row["generated"] = m.generated;
      row["delivered"] = m.delivered;
      row["dropped_expired"] = m.dropped_expired;
      row["dropped_retry"] = m.dropped_retry;
      row["dropped_tail"] = m.dropped_tail;
      row["bits_delivered"] = m.bits_delivered;
      row["throughput_bps"] = class_throughput(run, i);
      row["pdr"] = optional_json(pdr(m));
      row["collisions"] = m.collisions;
      row["transmissions"] = m.transmissions;
      row["a_col"] = run.measured_a_col;
      row["mean_delay_ticks"] = optional_json(mean_delay_ticks(m));
      rows.push_back(std::move(row));
    }
  }
  return rows.dump(2) + "\n";
}

void emit(const std::vector<RunMetrics>& runs, OutputFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << (format == OutputFormat::csv ? to_csv(runs) : to_json(runs));
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<RunRow> parse_run_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRunCsvHeader) {
    throw std::runtime_error("run CSV header mismatch");
  }
  std::vector<RunRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 17) throw std::runtime_error("run CSV row has " + std::to_string(f.size()) + " fields");
    RunRow r;
    r.protocol = f[0];
    r.scenario = parse_number<int>(f[1], "scenario");
    r.node_count = parse_number<int>(f[2], "node_count");
    r.seed = parse_number<std::uint64_t>(f[3], "seed");
    r.cls = f[4];
    r.metrics.generated = parse_number<std::int64_t>(f[5], "generated");
    r.metrics.delivered = parse_number<std::int64_t>(f[6], "delivered");
    r.metrics.dropped_expired = parse_number<std::int64_t>(f[7], "dropped_expired");
    r.metrics.dropped_retry = parse_number<std::int64_t>(f[8], "dropped_retry");
    r.metrics.dropped_tail = parse_number<std::int64_t>(f[9], "dropped_tail");
    r.metrics.bits_delivered = parse_number<std::int64_t>(f[10], "bits_delivered");
    r.throughput_bps = parse_number<double>(f[11], "throughput_bps");
    r.pdr = parse_opt(f[12], "pdr");
    r.metrics.collisions = parse_number<std::int64_t>(f[13], "collisions");
    r.metrics.transmissions = parse_number<std::int64_t>(f[14], "transmissions");
    r.a_col = parse_number<double>(f[15], "a_col");
    r.mean_delay_ticks = parse_opt(f[16], "mean_delay_ticks");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace hmac

#include "hmac/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

namespace hmac {

void SimConfig::validate() const {
  if (node_count < 2) throw ConfigError("node_count must be at least 2");
  if (duration < 0) throw ConfigError("duration must not be negative");
  if (scenario != 1 && scenario != 2) throw ConfigError("scenario must be 1 or 2");
  phy.validate();
  if (t_up_slots <= 0) throw ConfigError("t_up_slots must be positive");
  if (!(t_col > 0.0 && t_col < 1.0)) throw ConfigError("t_col must lie in (0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (txop_mode == TxopMode::normalized && burst_budget < kNumClasses) {
    throw ConfigError("burst_budget must be at least 4");
  }
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be positive");
  if (retry_limit < 0) throw ConfigError("retry_limit must not be negative");
  if (cca_window < 1) throw ConfigError("cca_window must be at least one tick");
  if (tx_range <= 0.0 || area_side <= 0.0) throw ConfigError("area and range must be positive");

  const auto& t = traffic;
  if (t.arrival_rate && *t.arrival_rate < 0.0) throw ConfigError("arrival_rate must not be negative");
  if (!(t.up_probability >= 0.0 && t.up_probability <= 1.0)) {
    throw ConfigError("up_probability must lie in [0, 1]");
  }
  double mix = 0.0;
  for (double m : t.class_mix) {
    if (m < 0.0) throw ConfigError("class_mix entries must not be negative");
    mix += m;
  }
  if (mix <= 0.0) throw ConfigError("class_mix must have a positive entry");
  if (t.hop_min < 1 || t.hop_min > t.hop_max) throw ConfigError("need 1 <= hop_min <= hop_max");
  if (t.lifetime_max < t.hop_max) throw ConfigError("lifetime_max must be at least hop_max");
  if (t.lifetime_unit_scale < 0 || t.cbr_interval < 0) {
    throw ConfigError("lifetime_unit_scale and cbr_interval must not be negative");
  }
  if (background_collision_p && !(*background_collision_p >= 0.0 && *background_collision_p <= 1.0)) {
    throw ConfigError("background_collision_p must lie in [0, 1]");
  }
  for (const auto& b : edca.cw) {
    if (b.cw_min < 1 || b.cw_min > b.cw_max) throw ConfigError("EDCA CW bounds need 1 <= cw_min <= cw_max");
  }
}

ChannelMode SimConfig::effective_channel_mode() const {
  if (channel_mode) return *channel_mode;
  return topology_mode == TopologyMode::abstract ? ChannelMode::single_domain
                                                 : ChannelMode::interference_graph;
}

ScenarioDefaults scenario_defaults(int scenario) {
  if (scenario == 2) return {8.0, 0.35};
  return {4.0, 0.0};
}

SimConfig scenario_control(SimConfig config) {
  const ScenarioDefaults d = scenario_defaults(config.scenario);
  if (!config.traffic.arrival_rate) config.traffic.arrival_rate = d.arrival_rate;
  if (!config.background_collision_p) config.background_collision_p = d.background_collision_p;
  return config;
}

bool scenario_target_met(int scenario, double measured_a_col, double t_col) {
  return scenario == 2 ? measured_a_col >= t_col : measured_a_col < t_col;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_as(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  }
  return out;
}

template <class T, std::size_t N>
std::array<T, N> parse_list(const std::string& key, const std::string& value) {
  std::array<T, N> out{};
  std::istringstream in(value);
  std::string item;
  std::size_t i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= N) throw ConfigError("key '" + key + "' expects " + std::to_string(N) + " values");
    out[i++] = parse_as<T>(key, item);
  }
  if (i != N) throw ConfigError("key '" + key + "' expects " + std::to_string(N) + " values");
  return out;
}

template <class E>
E parse_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<const char*, E>> options) {
  const std::string v = trim(value);
  for (const auto& [name, e] : options) {
    if (v == name) return e;
  }
  throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
}

using Setter = std::function<void(SimConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["protocol"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.protocol = parse_enum<Protocol>(k, v, {{"edca", Protocol::edca}, {"hmac", Protocol::hmac}});
    };
    m["node_count"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.node_count = parse_as<int>(k, v); };
    m["duration"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.duration = parse_as<Tick>(k, v); };
    m["seed"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.seed = parse_as<std::uint64_t>(k, v); };
    m["scenario"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.scenario = parse_as<int>(k, v); };
    m["topology_mode"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.topology_mode = parse_enum<TopologyMode>(
          k, v, {{"abstract", TopologyMode::abstract}, {"geometric", TopologyMode::geometric}});
    };
    m["channel_mode"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.channel_mode = parse_enum<ChannelMode>(
          k, v, {{"single_domain", ChannelMode::single_domain}, {"interference_graph", ChannelMode::interference_graph}});
    };
    m["area_side"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.area_side = parse_as<double>(k, v); };
    m["tx_range"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.tx_range = parse_as<double>(k, v); };
    m["traffic_model"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.traffic.model = parse_enum<TrafficModel>(k, v, {{"poisson", TrafficModel::poisson}, {"cbr", TrafficModel::cbr}});
    };
    m["arrival_rate"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.arrival_rate = parse_as<double>(k, v); };
    m["cbr_interval"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.cbr_interval = parse_as<Tick>(k, v); };
    m["mu"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.mu = parse_as<double>(k, v); };
    m["up_probability"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.up_probability = parse_as<double>(k, v); };
    m["class_mix"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.class_mix = parse_list<double, 3>(k, v); };
    m["lifetime_max"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.lifetime_max = parse_as<int>(k, v); };
    m["hop_min"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.hop_min = parse_as<int>(k, v); };
    m["hop_max"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.hop_max = parse_as<int>(k, v); };
    m["lifetime_unit_scale"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.traffic.lifetime_unit_scale = parse_as<Tick>(k, v); };
    m["slot_time"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.phy.slot_time = parse_as<Tick>(k, v); };
    m["sifs"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.phy.sifs = parse_as<Tick>(k, v); };
    m["t_ack"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.phy.t_ack = parse_as<Tick>(k, v); };
    m["data_rate"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.phy.data_rate = parse_as<double>(k, v); };
    m["mpdu_bits"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.phy.mpdu_bits = parse_as<std::int64_t>(k, v); };
    m["phy_overhead_bits"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.phy.phy_overhead_bits = parse_as<std::int64_t>(k, v); };
    m["t_up_slots"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.t_up_slots = parse_as<int>(k, v); };
    m["t_col"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.t_col = parse_as<double>(k, v); };
    m["alpha"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.alpha = parse_as<double>(k, v); };
    m["burst_budget"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.burst_budget = parse_as<int>(k, v); };
    m["txop_mode"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.txop_mode = parse_enum<TxopMode>(k, v, {{"normalized", TxopMode::normalized}, {"raw", TxopMode::raw}});
    };
    m["pf_exponent"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.pf_exponent = parse_enum<PfExponent>(
          k, v, {{"class_and_retry", PfExponent::class_and_retry}, {"retry_only", PfExponent::retry_only}});
    };
    m["weights"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.weights = WeightConfig(c.weights.w_max(), parse_list<double, 4>(k, v));
    };
    m["w_max"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.weights = WeightConfig(parse_as<double>(k, v), c.weights.w());
    };
    m["edca_aifsn"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.edca.aifsn = parse_list<int, 4>(k, v); };
    m["edca_cw_min"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      const auto l = parse_list<int, 4>(k, v);
      for (int i = 0; i < kNumClasses; ++i) c.edca.cw[i].cw_min = l[i];
    };
    m["edca_cw_max"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      const auto l = parse_list<int, 4>(k, v);
      for (int i = 0; i < kNumClasses; ++i) c.edca.cw[i].cw_max = l[i];
    };
    m["edca_txop"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.edca.txop_limit = parse_list<Tick, 4>(k, v); };
    m["queue_capacity"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.queue_capacity = parse_as<std::size_t>(k, v); };
    m["retry_limit"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.retry_limit = parse_as<int>(k, v); };
    m["background_collision_p"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.background_collision_p = parse_as<double>(k, v); };
    m["cca_window"] = [](SimConfig& c, const std::string& k, const std::string& v) { c.cca_window = parse_as<Tick>(k, v); };
    return m;
  }();
  return table;
}

}  // namespace

void apply_overrides(SimConfig& config, const std::map<std::string, std::string>& overrides) {
  const auto& table = setters();
  for (const auto& [key, value] : overrides) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second(config, key, value);
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace hmac

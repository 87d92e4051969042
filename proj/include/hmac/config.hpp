#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "hmac/adaptation.hpp"
#include "hmac/priority_queues.hpp"
#include "hmac/types.hpp"

namespace hmac {

enum class TrafficModel { poisson, cbr };
enum class TopologyMode { abstract, geometric };
enum class ChannelMode { single_domain, interference_graph };

struct TrafficConfig {
  TrafficModel model = TrafficModel::poisson;
  // Mean packet arrivals per second at each node. Empty: chosen by the scenario.
  std::optional<double> arrival_rate;
  Tick cbr_interval = 0;          // cbr model; 0 derives it from arrival_rate
  double mu = 0.0;                // service rate, reported as rho = lambda / mu
  double up_probability = 0.25;   // fraction of packets flagged QF=1
  std::array<double, 3> class_mix{1.0, 1.0, 1.0};  // relative HP, MP, LP shares
  int lifetime_max = 20;          // lifetime units
  int hop_min = 1;
  int hop_max = 10;
  Tick lifetime_unit_scale = 0;   // ticks per lifetime unit; 0 means one frame time Tr
};

struct SimConfig {
  Protocol protocol = Protocol::hmac;
  int node_count = 10;
  Tick duration = 60'000'000;
  std::uint64_t seed = 1;
  int scenario = 1;
  TopologyMode topology_mode = TopologyMode::abstract;
  std::optional<ChannelMode> channel_mode;  // empty: follows the topology mode
  double area_side = 600.0;                 // metres, geometric mode
  double tx_range = 250.0;                  // metres
  TrafficConfig traffic;
  PhyParams phy;
  int t_up_slots = 5000;
  double t_col = 0.5;
  double alpha = 0.8;
  int burst_budget = 16;
  TxopMode txop_mode = TxopMode::normalized;
  PfExponent pf_exponent = PfExponent::class_and_retry;
  WeightConfig weights;
  EdcaTable edca;
  std::size_t queue_capacity = kDefaultQueueCapacity;
  int retry_limit = 7;
  std::optional<double> background_collision_p;  // empty: chosen by the scenario
  Tick cca_window = 1;                            // ticks before a start is sensed; 1 = same-tick collisions only

  void validate() const;
  Tick transmission_time() const { return hmac::transmission_time(phy); }
  Tick t_up() const { return static_cast<Tick>(t_up_slots) * phy.slot_time; }
  ChannelMode effective_channel_mode() const;
};

struct ScenarioDefaults {
  double arrival_rate = 0.0;
  double background_collision_p = 0.0;
};

ScenarioDefaults scenario_defaults(int scenario);

/// Fills in the scenario-dependent load and background collision forcing
/// unless they were set explicitly. Both scenarios use an equal class mix.
SimConfig scenario_control(SimConfig config);

/// Scenario 1 targets a smoothed collision average below the threshold,
/// scenario 2 one at or above it.
bool scenario_target_met(int scenario, double measured_a_col, double t_col);

/// Applies flat key=value overrides. Throws ConfigError naming the first
/// unknown key or unparsable value.
void apply_overrides(SimConfig& config, const std::map<std::string, std::string>& overrides);

/// Parses a flat key=value text file body ('#' starts a comment).
std::map<std::string, std::string> parse_key_values(const std::string& text);

}  // namespace hmac

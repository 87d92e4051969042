#pragma once

// Deterministic discrete-event simulator of EDCA and H-MAC contention on a
// shared wireless channel with multi-hop forwarding.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "hmac/adaptation.hpp"
#include "hmac/config.hpp"
#include "hmac/metrics.hpp"
#include "hmac/priority_queues.hpp"
#include "hmac/topology.hpp"
#include "hmac/urgency.hpp"

namespace hmac {

enum class Phase { idle, contending, txop };

/// One class queue acting as a virtual station inside a node.
struct Contender {
  bool active = false;
  Tick aifs = 0;
  Tick backoff = 0;  // remaining backoff once AIFS has elapsed
  Tick start = 0;    // when the current idle countdown began
  int cw = 0;
  int k = 0;         // failed attempts since the last success

  Tick expiry() const { return start + aifs + backoff; }
};

struct Transmission {
  int src = -1;
  int dst = -1;
  Tick start = 0;
  Tick end = 0;
  std::uint64_t packet_id = 0;
  int cls = 0;
  bool success = false;
};

struct Burst {
  int cls = 0;
  int winner = 0;
  std::vector<Packet> frames;
  std::size_t next = 0;
  Transmission current;
};

struct NodeState {
  int id = 0;
  QueueSet queues;
  PerClass<ClassAdaptState> adapt{};
  PerClass<Contender> contenders{};
  PerClass<double> credits{};
  std::mt19937_64 traffic_rng;
  std::mt19937_64 mac_rng;
  Phase phase = Phase::idle;
  int busy_count = 0;  // transmissions currently sensed from neighbours
  bool transmitting = false;
  std::uint64_t attempt_gen = 0;
  Burst burst;
};

struct GenerationContext {
  int node_count = 2;
  Tick lifetime_scale = 1;
  std::int64_t payload_bits = 0;
  const Topology* routes = nullptr;  // geometric mode: hop count follows the route
};

/// Draws a fresh packet at `source`. Abstract mode: H ~ U{hop_min..hop_max};
/// geometric mode: H is the route length. LT ~ U{H..lifetime_max} lifetime units.
Packet generate_packet(int source, Tick now, const TrafficConfig& traffic, const GenerationContext& ctx,
                       std::mt19937_64& rng, std::uint64_t id);

class Simulator {
 public:
  /// The configuration must already have scenario defaults resolved.
  explicit Simulator(SimConfig config, std::ostream* trace = nullptr);

  /// Runs to the configured duration and returns the metrics.
  RunMetrics run();

  /// Processes every event with time <= `until`.
  void run_until(Tick until);
  RunMetrics metrics() const;

  // Inspection and fixture hooks.
  Tick now() const { return now_; }
  const SimConfig& config() const { return config_; }
  const NodeState& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const Topology& topology() const { return topology_; }
  Tick frame_time() const { return tr_; }
  /// Queues `packet` at `node` at the current time as if it had just arrived.
  void inject(int node, Packet packet);
  /// Overrides the remaining backoff of an active contender.
  void set_backoff(int node, int cls, Tick ticks);
  void set_receiver_override(int receiver) { receiver_override_ = receiver; }
  void record_transmissions(bool on) { record_log_ = on; }
  const std::vector<Transmission>& transmission_log() const { return log_; }
  /// Delivered packets, kept while recording is on.
  const std::vector<Packet>& delivered_log() const { return delivered_; }
  MacParameterSet current_params(int node);

 private:
  enum class EventKind : int { frame_end = 0, sense_busy = 1, adapt = 2, arrival = 3, attempt = 4 };

  struct Event {
    Tick time = 0;
    EventKind kind = EventKind::arrival;
    std::uint64_t seq = 0;
    int node = -1;
    std::uint64_t gen = 0;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
      return a.seq > b.seq;
    }
  };

  void schedule(Tick time, EventKind kind, int node, std::uint64_t gen = 0);
  void dispatch(const Event& e);

  void on_arrival(int n);
  void on_adapt();
  void on_attempt(int n);
  void on_sense_busy(int src);
  void on_frame_end(int n);

  bool counting(const NodeState& node) const { return !node.transmitting && node.busy_count == 0; }
  void admit(int n, Packet packet);
  void activate(NodeState& node, int cls);
  void reset_contender(NodeState& node, int cls);
  void draw_backoff(NodeState& node, int cls);
  void rearm(NodeState& node);
  void freeze(NodeState& node);
  void resume(NodeState& node);
  void refresh_contenders(NodeState& node);
  void expire_waiting(NodeState& node);
  void refill_credits(NodeState& node);
  std::optional<int> service_class(NodeState& node);
  bool grant_txop(NodeState& node, int winner);
  void start_frame(NodeState& node);
  int choose_receiver(NodeState& node, const Packet& packet);
  bool frame_collided(const Transmission& tx) const;
  void hop_complete(Packet packet, int receiver);
  void end_burst(NodeState& node, bool success, bool retry_dropped);
  void trace(int node, const char* kind, int cls, std::uint64_t packet_id, Tick at = -1);

  SimConfig config_;
  std::ostream* trace_;
  Topology topology_;
  std::vector<NodeState> nodes_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t seq_ = 0;
  Tick now_ = 0;
  Tick tr_ = 0;
  Tick cca_ = 0;
  double background_p_ = 0.0;
  std::uint64_t next_packet_id_ = 1;
  PerClass<ClassMetrics> metrics_{};
  std::vector<Transmission> recent_;  // frames that may still overlap a frame in progress
  std::vector<Transmission> log_;
  std::vector<Packet> delivered_;
  bool record_log_ = false;
  int receiver_override_ = -1;
  bool started_ = false;
};

/// Resolves scenario defaults, validates and runs one simulation.
RunMetrics run(const SimConfig& config, std::ostream* trace = nullptr);

}  // namespace hmac

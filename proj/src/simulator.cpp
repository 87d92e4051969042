#include "hmac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace hmac {

namespace {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t node, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kTrafficStream = 1;
constexpr std::uint64_t kMacStream = 2;
constexpr std::uint64_t kTopologyStream = 3;

Tick next_interarrival(const TrafficConfig& t, std::mt19937_64& rng) {
  const double rate = t.arrival_rate.value_or(0.0);
  if (t.model == TrafficModel::cbr) {
    if (t.cbr_interval > 0) return t.cbr_interval;
    return std::max<Tick>(1, std::llround(1e6 / rate));
  }
  std::exponential_distribution<double> gap(rate / 1e6);
  return std::max<Tick>(1, static_cast<Tick>(std::ceil(gap(rng))));
}

bool has_traffic(const TrafficConfig& t) {
  return (t.model == TrafficModel::cbr && t.cbr_interval > 0) || t.arrival_rate.value_or(0.0) > 0.0;
}

}  // namespace

Packet generate_packet(int source, Tick now, const TrafficConfig& traffic, const GenerationContext& ctx,
                       std::mt19937_64& rng, std::uint64_t id) {
  Packet p;
  p.id = id;
  p.source_id = source;
  p.generation_time = now;
  p.last_arrival_time = now;
  p.payload_bits = ctx.payload_bits;

  std::uniform_int_distribution<int> other(0, ctx.node_count - 2);
  int dest = other(rng);
  if (dest >= source) ++dest;
  p.dest_id = dest;

  int hops = 0;
  if (ctx.routes != nullptr && ctx.routes->has_routes()) {
    hops = ctx.routes->hop_distance(source, dest);
  } else {
    hops = std::uniform_int_distribution<int>(traffic.hop_min, traffic.hop_max)(rng);
  }
  const int lifetime_units =
      std::uniform_int_distribution<int>(hops, std::max(hops, traffic.lifetime_max))(rng);
  p.total_hops = hops;
  p.remaining_hops = hops;
  p.lifetime = static_cast<Tick>(lifetime_units) * ctx.lifetime_scale;

  std::discrete_distribution<int> mix({traffic.class_mix[0], traffic.class_mix[1], traffic.class_mix[2]});
  p.spi = 1 + mix(rng);
  p.qf = std::bernoulli_distribution(traffic.up_probability)(rng) ? 1 : 0;
  p.dui = compute_dui(p);
  return p;
}

Simulator::Simulator(SimConfig config, std::ostream* trace) : config_(std::move(config)), trace_(trace) {
  config_.validate();
  tr_ = config_.transmission_time();
  cca_ = config_.cca_window;
  if (cca_ >= tr_) throw ConfigError("cca_window must be shorter than one frame time");
  background_p_ = config_.background_collision_p.value_or(0.0);

  if (config_.topology_mode == TopologyMode::geometric) {
    auto rng = make_stream(config_.seed, 0, kTopologyStream);
    topology_ = Topology::geometric(config_.node_count, config_.area_side, config_.tx_range, rng);
    if (config_.effective_channel_mode() == ChannelMode::single_domain) topology_.share_medium();
  } else {
    if (config_.effective_channel_mode() == ChannelMode::interference_graph) {
      throw ConfigError("interference_graph channel needs the geometric topology");
    }
    topology_ = Topology::complete(config_.node_count);
  }

  nodes_.reserve(static_cast<std::size_t>(config_.node_count));
  for (int i = 0; i < config_.node_count; ++i) {
    NodeState n;
    n.id = i;
    n.queues = QueueSet(config_.queue_capacity, config_.protocol == Protocol::edca ? QueueDiscipline::fifo
                                                                                    : QueueDiscipline::urgency);
    n.traffic_rng = make_stream(config_.seed, static_cast<std::uint64_t>(i), kTrafficStream);
    n.mac_rng = make_stream(config_.seed, static_cast<std::uint64_t>(i), kMacStream);
    const auto& table = config_.edca.cw;
    for (int c = 0; c < kNumClasses; ++c) n.adapt[c] = ClassAdaptState::with_defaults(c, table[c]);
    nodes_.push_back(std::move(n));
  }
  for (auto& n : nodes_) refill_credits(n);
}

void Simulator::schedule(Tick time, EventKind kind, int node, std::uint64_t gen) {
  events_.push(Event{time, kind, seq_++, node, gen});
}

void Simulator::trace(int node, const char* kind, int cls, std::uint64_t packet_id, Tick at) {
  if (trace_ == nullptr) return;
  *trace_ << (at >= 0 ? at : now_) << ' ' << node << ' ' << kind << ' ' << class_name(cls) << ' '
          << packet_id << '\n';
}

RunMetrics Simulator::run() {
  run_until(config_.duration);
  return metrics();
}

void Simulator::run_until(Tick until) {
  if (!started_) {
    started_ = true;
    if (has_traffic(config_.traffic)) {
      for (auto& n : nodes_) {
        Tick first = next_interarrival(config_.traffic, n.traffic_rng);
        if (config_.traffic.model == TrafficModel::cbr) {
          first = std::uniform_int_distribution<Tick>(1, first)(n.traffic_rng);
        }
        schedule(first, EventKind::arrival, n.id);
      }
    }
    schedule(config_.t_up(), EventKind::adapt, -1);
  }
  while (!events_.empty() && events_.top().time <= until) {
    const Event e = events_.top();
    events_.pop();
    now_ = e.time;
    dispatch(e);
  }
  now_ = std::max(now_, until);
}

void Simulator::dispatch(const Event& e) {
  switch (e.kind) {
    case EventKind::arrival:
      on_arrival(e.node);
      break;
    case EventKind::adapt:
      on_adapt();
      break;
    case EventKind::attempt:
      if (e.gen == nodes_[e.node].attempt_gen) on_attempt(e.node);
      break;
    case EventKind::sense_busy:
      on_sense_busy(e.node);
      break;
    case EventKind::frame_end:
      on_frame_end(e.node);
      break;
  }
}

MacParameterSet Simulator::current_params(int n) {
  NodeState& node = nodes_[n];
  if (config_.protocol == Protocol::edca) return static_edca_params(config_.phy, config_.edca);

  MacParameterSet params;
  const PerClass<double> x = queue_shares(node.queues);
  PerClass<double> p_col{};
  for (int i = 0; i < kNumClasses; ++i) p_col[i] = node.adapt[i].p_col;
  const AccessRatios ar = access_ratios(x, p_col, config_.weights);
  const TxopLimits txop =
      txop_limits(ar.ar, tr_, config_.phy.sifs, x, config_.txop_mode, config_.burst_budget);
  const PerClass<int> aifsn = aifsn_values(config_.weights, x);
  const PerClass<double> pf = priority_factors(config_.weights);
  const PerClass<CwBounds> cw = adapt_contention_windows(node.adapt, config_.t_col, x);
  for (int i = 0; i < kNumClasses; ++i) {
    auto& c = params.cls[i];
    c.aifsn = aifsn[i];
    c.aifs = aifs_duration(aifsn[i], config_.phy);
    c.txop_limit = txop.limit[i];
    c.pf = pf[i];
    c.access_ratio = ar.ar[i];
    c.cx = ar.cx[i];
    c.cw = cw[i];
    node.adapt[i].cw_min = cw[i].cw_min;
    node.adapt[i].cw_max = cw[i].cw_max;
  }
  return params;
}

void Simulator::refill_credits(NodeState& node) {
  if (config_.protocol != Protocol::hmac) return;
  const PerClass<double> x = queue_shares(node.queues);
  PerClass<double> p_col{};
  for (int i = 0; i < kNumClasses; ++i) p_col[i] = node.adapt[i].p_col;
  const AccessRatios ar = access_ratios(x, p_col, config_.weights);
  const TxopLimits shares =
      txop_limits(ar.ar, tr_, config_.phy.sifs, x, TxopMode::normalized, std::max(config_.burst_budget, 4));
  for (int i = 0; i < kNumClasses; ++i) node.credits[i] = shares.packets[i];
}

void Simulator::draw_backoff(NodeState& node, int cls) {
  const MacParameterSet params = current_params(node.id);
  const auto& p = params.cls[cls];
  Contender& c = node.contenders[cls];
  c.cw = std::clamp(c.cw, p.cw.cw_min, p.cw.cw_max);
  const int draw = std::uniform_int_distribution<int>(0, c.cw)(node.mac_rng);
  const BackoffInputs in{.cls = cls, .k = c.k, .draw = draw, .pf = p.pf, .exponent = config_.pf_exponent};
  c.backoff = backoff_duration(config_.protocol, in, config_.phy);
  c.aifs = p.aifs;
}

void Simulator::activate(NodeState& node, int cls) {
  if (config_.protocol == Protocol::hmac) {
    // H-MAC nodes contend once, with the parameters of the class they would serve.
    for (const auto& other : node.contenders) {
      if (other.active) return;
    }
    const auto next = service_class(node);
    if (!next) return;
    cls = *next;
  }
  Contender& c = node.contenders[cls];
  if (c.active) return;
  c.active = true;
  c.k = 0;
  c.cw = current_params(node.id).cls[cls].cw.cw_min;
  draw_backoff(node, cls);
  c.start = now_;
  if (counting(node)) rearm(node);
}

void Simulator::reset_contender(NodeState& node, int cls) {
  Contender& c = node.contenders[cls];
  c = Contender{};
  if (node.queues.total_size() > 0) activate(node, cls);
}

void Simulator::rearm(NodeState& node) {
  ++node.attempt_gen;
  if (!counting(node)) return;
  Tick next = std::numeric_limits<Tick>::max();
  for (const auto& c : node.contenders) {
    if (c.active) next = std::min(next, c.expiry());
  }
  if (next == std::numeric_limits<Tick>::max()) {
    node.phase = Phase::idle;
    return;
  }
  node.phase = Phase::contending;
  schedule(std::max(next, now_), EventKind::attempt, node.id, node.attempt_gen);
}

void Simulator::freeze(NodeState& node) {
  for (auto& c : node.contenders) {
    if (!c.active) continue;
    const Tick elapsed = now_ - c.start;
    if (elapsed > c.aifs) c.backoff -= std::min(c.backoff, elapsed - c.aifs);
    c.start = now_;
  }
  ++node.attempt_gen;
}

void Simulator::resume(NodeState& node) {
  const MacParameterSet params = current_params(node.id);
  for (int i = 0; i < kNumClasses; ++i) {
    Contender& c = node.contenders[i];
    if (!c.active) continue;
    c.start = now_;
    c.aifs = params.cls[i].aifs;
  }
  rearm(node);
}

void Simulator::refresh_contenders(NodeState& node) {
  bool changed = false;
  if (config_.protocol == Protocol::hmac) {
    if (node.queues.total_size() > 0) return;
    for (auto& c : node.contenders) {
      changed = changed || c.active;
      c = Contender{};
    }
    if (changed && counting(node)) rearm(node);
    return;
  }
  for (int i = 0; i < kNumClasses; ++i) {
    if (node.contenders[i].active && node.queues.queue(i).empty()) {
      node.contenders[i] = Contender{};
      changed = true;
    }
  }
  if (changed && counting(node)) rearm(node);
}

void Simulator::admit(int n, Packet packet) {
  NodeState& node = nodes_[n];
  const int cls = packet.queue_class();
  const std::uint64_t id = packet.id;
  EnqueueResult r = enqueue(node.queues, std::move(packet));
  if (r.evicted) {
    metrics_[r.evicted->queue_class()].dropped_tail += 1;
    trace(n, "drop_tail", r.evicted->queue_class(), r.evicted->id);
  }
  if (!r.accepted) {
    metrics_[cls].dropped_tail += 1;
    trace(n, "drop_tail", cls, id);
    return;
  }
  activate(node, cls);
}

void Simulator::inject(int n, Packet packet) {
  metrics_[packet.queue_class()].generated += 1;
  admit(n, std::move(packet));
}

void Simulator::set_backoff(int n, int cls, Tick ticks) {
  NodeState& node = nodes_.at(static_cast<std::size_t>(n));
  Contender& c = node.contenders.at(static_cast<std::size_t>(cls));
  if (!c.active) return;
  c.backoff = ticks;
  if (counting(node)) rearm(node);
}

void Simulator::on_arrival(int n) {
  NodeState& node = nodes_[n];
  const GenerationContext ctx{
      .node_count = config_.node_count,
      .lifetime_scale = config_.traffic.lifetime_unit_scale > 0 ? config_.traffic.lifetime_unit_scale : tr_,
      .payload_bits = config_.phy.mpdu_bits,
      .routes = topology_.has_routes() ? &topology_ : nullptr};
  Packet p = generate_packet(n, now_, config_.traffic, ctx, node.traffic_rng, next_packet_id_++);
  metrics_[p.queue_class()].generated += 1;
  trace(n, "gen", p.queue_class(), p.id);
  admit(n, std::move(p));
  schedule(now_ + next_interarrival(config_.traffic, node.traffic_rng), EventKind::arrival, n);
}

void Simulator::expire_waiting(NodeState& node) {
  std::vector<Packet> dropped;
  drop_expired(node.queues, now_, &dropped);
  for (const auto& p : dropped) {
    metrics_[p.queue_class()].dropped_expired += 1;
    trace(node.id, "drop_expired", p.queue_class(), p.id);
  }
  if (!dropped.empty()) refresh_contenders(node);
}

void Simulator::on_adapt() {
  for (auto& node : nodes_) {
    expire_waiting(node);
    for (auto& s : node.adapt) s = update_collision_ewma(s, config_.alpha);
    refill_credits(node);
  }
  schedule(now_ + config_.t_up(), EventKind::adapt, -1);
}

void Simulator::on_attempt(int n) {
  NodeState& node = nodes_[n];
  int winner = -1;
  for (int i = 0; i < kNumClasses; ++i) {
    Contender& c = node.contenders[i];
    if (!c.active || c.expiry() > now_) continue;
    if (winner < 0) {
      winner = i;
      continue;
    }
    // Virtual collision inside the node: the lower class index keeps the grant.
    c.k += 1;
    c.cw = grow_cw(c.cw, current_params(n).cls[i].cw.cw_max);
    draw_backoff(node, i);
  }
  if (winner < 0) {
    rearm(node);
    return;
  }
  freeze(node);
  expire_waiting(node);
  if (!grant_txop(node, winner)) {
    reset_contender(node, winner);
    resume(node);
    return;
  }
  node.transmitting = true;
  node.phase = Phase::txop;
  ++node.attempt_gen;
  schedule(now_ + cca_, EventKind::sense_busy, n);
  start_frame(node);
}

std::optional<int> Simulator::service_class(NodeState& node) {
  if (node.queues.total_size() == 0) return std::nullopt;
  PerClass<bool> eligible{};
  bool any = false;
  for (int i = 0; i < kNumClasses; ++i) {
    eligible[i] = node.credits[i] > 0.0 && !node.queues.queue(i).empty();
    any = any || eligible[i];
  }
  if (!any) {
    refill_credits(node);
    for (int i = 0; i < kNumClasses; ++i) eligible[i] = node.credits[i] > 0.0;
  }
  return select_service_queue(node.queues, eligible);
}

bool Simulator::grant_txop(NodeState& node, int winner) {
  int cls = winner;
  Tick limit = 0;
  if (config_.protocol == Protocol::edca) {
    if (node.queues.queue(winner).empty()) return false;
    limit = static_edca_params(config_.phy, config_.edca).cls[winner].txop_limit;
  } else {
    const auto selected = service_class(node);
    if (!selected) return false;
    cls = *selected;
    limit = current_params(node.id).cls[cls].txop_limit;
  }
  Burst& b = node.burst;
  b = Burst{};
  b.cls = cls;
  b.winner = winner;
  b.frames = dequeue_burst(node.queues, cls, limit, tr_, config_.phy.sifs);
  if (config_.protocol == Protocol::hmac) node.credits[cls] -= static_cast<double>(b.frames.size());
  return !b.frames.empty();
}

int Simulator::choose_receiver(NodeState& node, const Packet& packet) {
  if (receiver_override_ >= 0) return receiver_override_;
  if (packet.remaining_hops <= 1) return packet.dest_id;
  if (topology_.has_routes()) return topology_.next_hop(node.id, packet.dest_id);
  const int n = config_.node_count;
  if (n <= 2) return packet.dest_id;
  // Uniform over nodes other than the sender and the final destination.
  int r = std::uniform_int_distribution<int>(0, n - 3)(node.mac_rng);
  const int lo = std::min(node.id, packet.dest_id);
  const int hi = std::max(node.id, packet.dest_id);
  if (r >= lo) ++r;
  if (r >= hi) ++r;
  return r;
}

void Simulator::start_frame(NodeState& node) {
  Burst& b = node.burst;
  const Packet& p = b.frames[b.next];
  b.current = Transmission{.src = node.id,
                           .dst = choose_receiver(node, p),
                           .start = now_,
                           .end = now_ + tr_,
                           .packet_id = p.id,
                           .cls = b.cls};
  recent_.push_back(b.current);
  trace(node.id, "tx_start", b.cls, p.id);
  schedule(b.current.end, EventKind::frame_end, node.id);
}

void Simulator::on_sense_busy(int src) {
  for (int m : topology_.neighbours(src)) {
    NodeState& node = nodes_[m];
    node.busy_count += 1;
    if (node.busy_count == 1 && !node.transmitting) freeze(node);
  }
}

bool Simulator::frame_collided(const Transmission& tx) const {
  for (const auto& other : recent_) {
    if (other.src == tx.src && other.start == tx.start) continue;
    if (other.start >= tx.end || other.end <= tx.start) continue;
    if (other.src == tx.dst || topology_.in_range(other.src, tx.dst)) return true;
  }
  return false;
}

void Simulator::hop_complete(Packet packet, int receiver) {
  const int cls = packet.queue_class();
  packet = record_hop_arrival(std::move(packet), now_);
  if (is_expired(packet)) {
    metrics_[cls].dropped_expired += 1;
    trace(receiver, "drop_expired", cls, packet.id);
    return;
  }
  if (packet.remaining_hops == 0) {
    auto& m = metrics_[cls];
    m.delivered += 1;
    m.bits_delivered += packet.payload_bits;
    m.sum_end_to_end_delay += now_ - packet.generation_time;
    trace(receiver, "deliver", cls, packet.id);
    if (record_log_) delivered_.push_back(packet);
    return;
  }
  trace(receiver, "forward", cls, packet.id);
  admit(receiver, std::move(packet));
}

void Simulator::on_frame_end(int n) {
  NodeState& node = nodes_[n];
  Burst& b = node.burst;
  Transmission tx = b.current;

  // Frames that started more than one frame time before this one cannot overlap anything still live.
  std::erase_if(recent_, [&](const Transmission& t) { return t.start + 2 * tr_ <= now_; });

  bool failed = frame_collided(tx);
  if (!failed && background_p_ > 0.0) {
    failed = std::bernoulli_distribution(background_p_)(node.mac_rng);
  }
  tx.success = !failed;
  if (record_log_) log_.push_back(tx);

  auto& adapt = node.adapt[b.cls];
  auto& m = metrics_[b.cls];
  adapt.transmissions_this_period += 1;
  m.transmissions += 1;

  Packet packet = std::move(b.frames[b.next]);
  ++b.next;
  if (!failed) {
    trace(n, "tx_ok", b.cls, tx.packet_id);
    hop_complete(std::move(packet), tx.dst);
    if (b.next < b.frames.size()) {
      start_frame(node);
      return;
    }
    end_burst(node, true, false);
    return;
  }

  adapt.collisions_this_period += 1;
  m.collisions += 1;
  trace(n, "tx_fail", b.cls, tx.packet_id);
  packet.tx_failures += 1;
  bool retry_dropped = false;
  std::vector<Packet> requeue;
  if (packet.tx_failures > config_.retry_limit) {
    metrics_[b.cls].dropped_retry += 1;
    trace(n, "drop_retry", b.cls, packet.id);
    retry_dropped = true;
  } else {
    requeue.push_back(std::move(packet));
  }
  for (std::size_t i = b.next; i < b.frames.size(); ++i) requeue.push_back(std::move(b.frames[i]));
  b.frames.clear();
  b.next = 0;
  for (auto& p : requeue) admit(n, std::move(p));
  end_burst(node, false, retry_dropped);
}

void Simulator::end_burst(NodeState& node, bool success, bool retry_dropped) {
  node.transmitting = false;
  node.burst.frames.clear();
  node.burst.next = 0;

  Contender& w = node.contenders[node.burst.winner];
  const CwBounds bounds = current_params(node.id).cls[node.burst.winner].cw;
  if (success || retry_dropped) {
    w.k = 0;
    w.cw = bounds.cw_min;
  } else {
    w.k += 1;
    w.cw = grow_cw(w.cw, bounds.cw_max);
  }
  if (config_.protocol == Protocol::hmac) {
    const Contender carry = w;
    w = Contender{};
    if (const auto next = service_class(node)) {
      Contender& c = node.contenders[*next];
      c = carry;
      c.active = true;
      if (success || retry_dropped) c.cw = current_params(node.id).cls[*next].cw.cw_min;
      draw_backoff(node, *next);
    }
  } else if (node.queues.queue(node.burst.winner).empty()) {
    w = Contender{};
  } else {
    w.active = true;
    draw_backoff(node, node.burst.winner);
  }
  for (int i = 0; i < kNumClasses && config_.protocol == Protocol::edca; ++i) {
    if (node.queues.queue(i).empty()) {
      node.contenders[i] = Contender{};
    } else if (!node.contenders[i].active) {
      node.contenders[i].active = true;
      node.contenders[i].k = 0;
      node.contenders[i].cw = current_params(node.id).cls[i].cw.cw_min;
      draw_backoff(node, i);
    }
  }

  for (int m : topology_.neighbours(node.id)) {
    NodeState& other = nodes_[m];
    other.busy_count -= 1;
    if (other.busy_count == 0 && !other.transmitting) resume(other);
  }
  if (node.busy_count == 0) {
    resume(node);
  } else {
    node.phase = Phase::contending;
  }
}

RunMetrics Simulator::metrics() const {
  RunMetrics r;
  r.protocol = config_.protocol;
  r.node_count = config_.node_count;
  r.scenario = config_.scenario;
  r.seed = config_.seed;
  r.classes = metrics_;
  r.wall_duration = config_.duration;
  for (const auto& node : nodes_) {
    for (int i = 0; i < kNumClasses; ++i) {
      r.in_flight[i] += static_cast<std::int64_t>(node.queues.queue(i).size());
    }
    if (node.transmitting) {
      const Burst& b = node.burst;
      r.in_flight[b.cls] += static_cast<std::int64_t>(b.frames.size() - b.next);
    }
  }
  double sum = 0.0;
  int active = 0;
  for (const auto& m : metrics_) {
    if (m.transmissions == 0) continue;
    sum += static_cast<double>(m.collisions) / static_cast<double>(m.transmissions);
    ++active;
  }
  r.measured_a_col = active > 0 ? sum / active : 0.0;
  r.scenario_target_met = scenario_target_met(config_.scenario, r.measured_a_col, config_.t_col);
  return r;
}

RunMetrics run(const SimConfig& config, std::ostream* trace) {
  Simulator sim(scenario_control(config), trace);
  return sim.run();
}

}  // namespace hmac

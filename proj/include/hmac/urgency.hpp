#pragma once

// Per-packet dynamic urgency: local and cumulative delay, the per-hop delay
// threshold, the on-time success ratio and the Dynamic Urgency Index (DUI).
// Lower DUI means more urgent.

#include <cstdint>
#include <stdexcept>

#include "hmac/types.hpp"

namespace hmac {

struct Packet {
  std::uint64_t id = 0;
  int spi = static_cast<int>(ServiceClass::HP);  // static priority index of the sending user
  int qf = 0;                                    // QoS flag: 1 routes the packet to the UP queue
  Tick lifetime = 0;                             // LT, in ticks
  int total_hops = 1;                            // H
  int hops_traversed = 0;
  int remaining_hops = 1;                        // H_i = H - hops_traversed
  Tick cumulative_delay = 0;                     // CD
  Tick last_arrival_time = 0;                    // a_{i-1}; a_0 is the generation time
  int hop_success_count = 0;
  double dui = 0.0;
  std::int64_t payload_bits = 0;
  int source_id = 0;
  int dest_id = 0;
  Tick generation_time = 0;
  int tx_failures = 0;  // failed attempts on the current hop

  int queue_class() const { return qf != 0 ? static_cast<int>(ServiceClass::UP) : spi; }
};

class ClockError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class OvertraversalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NoThresholdError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Remaining lifetime divided evenly over the remaining hops. Negative once
/// the packet has overrun its lifetime.
double delay_threshold(const Packet& packet);

/// Fraction of traversed hops that met their threshold; 1.0 at the source.
double success_probability(const Packet& packet);

/// DUI = threshold * success probability.
double compute_dui(const Packet& packet);

bool is_expired(const Packet& packet);

/// Expiry test for a packet still waiting at a node: the time spent waiting
/// since its last arrival counts against the lifetime.
bool is_expired_at(const Packet& packet, Tick now);

/// Account for the packet arriving at the next node at `arrival_time`.
/// The hop counts as a success when its local delay did not exceed the
/// threshold that was in force when the hop began. The DUI is refreshed
/// unless the packet has reached its destination.
Packet record_hop_arrival(Packet packet, Tick arrival_time);

}  // namespace hmac

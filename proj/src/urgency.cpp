#include "hmac/urgency.hpp"

#include <string>

namespace hmac {

double delay_threshold(const Packet& packet) {
  if (packet.remaining_hops < 1) {
    throw NoThresholdError("packet " + std::to_string(packet.id) + " has no remaining hops");
  }
  return static_cast<double>(packet.lifetime - packet.cumulative_delay) /
         static_cast<double>(packet.remaining_hops);
}

double success_probability(const Packet& packet) {
  if (packet.hops_traversed == 0) return 1.0;
  return static_cast<double>(packet.hop_success_count) / static_cast<double>(packet.hops_traversed);
}

double compute_dui(const Packet& packet) {
  return delay_threshold(packet) * success_probability(packet);
}

bool is_expired(const Packet& packet) { return packet.cumulative_delay >= packet.lifetime; }

bool is_expired_at(const Packet& packet, Tick now) {
  return packet.cumulative_delay + (now - packet.last_arrival_time) >= packet.lifetime;
}

Packet record_hop_arrival(Packet packet, Tick arrival_time) {
  if (arrival_time < packet.last_arrival_time) {
    throw ClockError("packet " + std::to_string(packet.id) + " arrives at " +
                     std::to_string(arrival_time) + " before its previous arrival " +
                     std::to_string(packet.last_arrival_time));
  }
  if (packet.hops_traversed >= packet.total_hops) {
    throw OvertraversalError("packet " + std::to_string(packet.id) + " already traversed all " +
                             std::to_string(packet.total_hops) + " hops");
  }

  const double budget = delay_threshold(packet);
  const Tick local_delay = arrival_time - packet.last_arrival_time;

  packet.cumulative_delay += local_delay;
  packet.hops_traversed += 1;
  packet.remaining_hops = packet.total_hops - packet.hops_traversed;
  if (static_cast<double>(local_delay) <= budget) packet.hop_success_count += 1;
  packet.last_arrival_time = arrival_time;
  packet.tx_failures = 0;
  if (packet.remaining_hops >= 1) packet.dui = compute_dui(packet);
  return packet;
}

}  // namespace hmac

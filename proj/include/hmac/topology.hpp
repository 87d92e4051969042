#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hmac {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// Node placement, radio neighbourhoods and shortest-hop routes.
class Topology {
 public:
  /// Every node hears every other node; no routes.
  static Topology complete(int node_count);

  /// Uniform placement in a square with disc connectivity. Placement is
  /// redrawn until the graph is connected; throws ConfigError after
  /// `max_attempts` failures.
  static Topology geometric(int node_count, double area_side, double tx_range, std::mt19937_64& rng,
                            int max_attempts = 1000);

  /// Keeps positions and routes but lets every node hear every other node.
  void share_medium();

  int node_count() const { return static_cast<int>(neighbours_.size()); }
  const std::vector<int>& neighbours(int node) const { return neighbours_[node]; }
  bool in_range(int a, int b) const { return adjacency_[a * node_count() + b] != 0; }
  bool has_routes() const { return !next_hop_.empty(); }
  int hop_distance(int from, int to) const { return distance_[from * node_count() + to]; }
  int next_hop(int from, int to) const { return next_hop_[from * node_count() + to]; }
  const std::vector<Position>& positions() const { return positions_; }

 private:
  void build_neighbours();
  bool build_routes();

  std::vector<Position> positions_;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::vector<int>> neighbours_;
  std::vector<int> distance_;
  std::vector<int> next_hop_;
};

}  // namespace hmac

#include "hmac/topology.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "hmac/types.hpp"

namespace hmac {

Topology Topology::complete(int node_count) {
  Topology t;
  const auto n = static_cast<std::size_t>(node_count);
  t.adjacency_.assign(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) t.adjacency_[i * n + i] = 0;
  t.build_neighbours();
  return t;
}

Topology Topology::geometric(int node_count, double area_side, double tx_range, std::mt19937_64& rng,
                             int max_attempts) {
  std::uniform_real_distribution<double> coord(0.0, area_side);
  const auto n = static_cast<std::size_t>(node_count);
  const double r2 = tx_range * tx_range;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Topology t;
    t.positions_.resize(n);
    for (auto& p : t.positions_) {
      p.x = coord(rng);
      p.y = coord(rng);
    }
    t.adjacency_.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double dx = t.positions_[i].x - t.positions_[j].x;
        const double dy = t.positions_[i].y - t.positions_[j].y;
        t.adjacency_[i * n + j] = (dx * dx + dy * dy <= r2) ? 1 : 0;
      }
    }
    t.build_neighbours();
    if (t.build_routes()) return t;
  }
  throw ConfigError("could not place " + std::to_string(node_count) +
                    " nodes into a connected network; enlarge tx_range or shrink area_side");
}

void Topology::share_medium() {
  const auto n = static_cast<std::size_t>(node_count());
  adjacency_.assign(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) adjacency_[i * n + i] = 0;
  build_neighbours();
}

void Topology::build_neighbours() {
  const int n = static_cast<int>(std::sqrt(static_cast<double>(adjacency_.size())) + 0.5);
  neighbours_.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (adjacency_[i * n + j]) neighbours_[i].push_back(j);
    }
  }
}

bool Topology::build_routes() {
  const int n = node_count();
  distance_.assign(static_cast<std::size_t>(n * n), -1);
  next_hop_.assign(static_cast<std::size_t>(n * n), -1);
  // BFS from every destination; the parent toward the destination is the next hop.
  for (int dst = 0; dst < n; ++dst) {
    std::deque<int> frontier{dst};
    distance_[dst * n + dst] = 0;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop_front();
      for (int v : neighbours_[u]) {
        if (distance_[v * n + dst] >= 0) continue;
        distance_[v * n + dst] = distance_[u * n + dst] + 1;
        next_hop_[v * n + dst] = u;
        frontier.push_back(v);
      }
    }
    for (int v = 0; v < n; ++v) {
      if (distance_[v * n + dst] < 0) return false;
    }
  }
  return true;
}

}  // namespace hmac

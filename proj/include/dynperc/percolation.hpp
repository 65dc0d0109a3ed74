#pragma once

// Static Bernoulli bond percolation on the torus, plus the spread map used
// to bound how far fresh randomness can carry a vertex set: F^alpha is the
// set of vertices reachable from F after percolating only the edges with at
// least one endpoint outside F.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"
#include "dynperc/stats.hpp"

namespace dynperc {

struct EdgeConfig {
  Geometry g;                 // torus only
  std::vector<uint8_t> open;  // indexed by edge_index
};

// One Bernoulli(p) draw per edge, ascending edge_index.
inline EdgeConfig sample_config(const Geometry& g, double p, RngStream& rng) {
  g.validate();
  if (!g.torus()) throw InvalidParams("sample_config needs a torus");
  if (p < 0.0 || p > 1.0) throw InvalidParams("sample_config: p outside [0, 1]");
  EdgeConfig cfg{g, std::vector<uint8_t>(static_cast<size_t>(g.edge_count()))};
  for (auto& e : cfg.open) e = rng.bernoulli(p) ? 1 : 0;
  return cfg;
}

inline bool edge_open(const EdgeConfig& cfg, const EdgeId& e) {
  return cfg.open[static_cast<size_t>(edge_index(cfg.g, e))] != 0;
}

// Open cluster of x, BFS order.
inline std::vector<Vertex> cluster_of(const EdgeConfig& cfg, const Vertex& x) {
  const Geometry& g = cfg.g;
  std::vector<Vertex> out{wrap(g, x)};
  std::unordered_set<Vertex, VertexHash> seen{out[0]};
  for (size_t i = 0; i < out.size(); ++i)
    for (int k = 0; k < 2 * g.d; ++k) {
      if (!edge_open(cfg, edge_in_direction(g, out[i], k))) continue;
      Vertex y = neighbor(g, out[i], k);
      if (seen.insert(y).second) out.push_back(y);
    }
  return out;
}

// Max pairwise graph distance of a vertex set (the lattice metric, not the
// intra-cluster path metric).
inline int64_t lattice_diameter(const Geometry& g, std::span<const Vertex> vs) {
  int64_t diam = 0;
  for (size_t i = 0; i < vs.size(); ++i)
    for (size_t j = i + 1; j < vs.size(); ++j)
      diam = std::max(diam, graph_distance(g, vs[i], vs[j]));
  return diam;
}

struct ClusterStats {
  std::vector<int64_t> sizes;      // one entry per cluster
  std::vector<int64_t> diameters;  // parallel to sizes; empty when skipped
  int64_t max_size = 0;
  int64_t max_diameter = 0;
};

// All clusters via union-find. Diameters are quadratic in cluster size;
// callers that only need sizes (e.g. theta estimation on supercritical
// configs) pass with_diameters = false.
inline ClusterStats cluster_stats(const EdgeConfig& cfg, bool with_diameters = true) {
  const Geometry& g = cfg.g;
  const int64_t V = g.vertex_count();
  std::vector<int64_t> parent(static_cast<size_t>(V));
  for (int64_t i = 0; i < V; ++i) parent[static_cast<size_t>(i)] = i;
  auto find = [&](int64_t i) {
    while (parent[static_cast<size_t>(i)] != i) {
      parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
      i = parent[static_cast<size_t>(i)];
    }
    return i;
  };
  for (int64_t vi = 0; vi < V; ++vi) {
    const Vertex v = vertex_at(g, vi);
    for (int axis = 0; axis < g.d; ++axis) {
      const EdgeId e{v, axis};
      if (!cfg.open[static_cast<size_t>(edge_index(g, e))]) continue;
      const int64_t a = find(vi), b = find(vertex_index(g, neighbor(g, v, 2 * axis + 1)));
      if (a != b) parent[static_cast<size_t>(a)] = b;
    }
  }
  std::unordered_map<int64_t, std::vector<Vertex>> members;
  for (int64_t vi = 0; vi < V; ++vi) members[find(vi)].push_back(vertex_at(g, vi));
  ClusterStats out;
  for (auto& [root, vs] : members) {
    out.sizes.push_back(static_cast<int64_t>(vs.size()));
    out.max_size = std::max(out.max_size, out.sizes.back());
    if (with_diameters) {
      out.diameters.push_back(lattice_diameter(g, vs));
      out.max_diameter = std::max(out.max_diameter, out.diameters.back());
    }
  }
  return out;
}

// Vertices reachable from F when edge openness is decided by `open_edge`,
// consulted once per edge in deterministic BFS order; edges with both
// endpoints inside F are never consulted. `max_vertices = 0` means no cap.
template <class OpenFn>
std::vector<Vertex> spread_with(const Geometry& g, std::span<const Vertex> f, OpenFn&& open_edge,
                                int64_t max_vertices = 0) {
  std::unordered_set<Vertex, VertexHash> in_f;
  std::vector<Vertex> out;
  std::unordered_set<Vertex, VertexHash> seen;
  for (const Vertex& v : f) {
    Vertex w = wrap(g, v);
    in_f.insert(w);
    if (seen.insert(w).second) out.push_back(w);
  }
  if (out.empty()) throw InvalidParams("spread: empty seed set");
  std::unordered_map<EdgeId, bool, EdgeIdHash> decided;
  for (size_t i = 0; i < out.size(); ++i) {
    for (int k = 0; k < 2 * g.d; ++k) {
      const Vertex y = neighbor(g, out[i], k);
      if (in_f.contains(out[i]) && in_f.contains(y)) continue;
      const EdgeId e = edge_in_direction(g, out[i], k);
      auto [it, fresh] = decided.try_emplace(e, false);
      if (fresh) it->second = open_edge(e);
      if (!it->second) continue;
      if (seen.insert(y).second) {
        out.push_back(y);
        if (max_vertices > 0 && static_cast<int64_t>(out.size()) > max_vertices)
          throw TooLarge("spread: grew past max_vertices");
      }
    }
  }
  return out;
}

// F^alpha with fresh Bernoulli(alpha) edges, one draw per consulted edge.
inline std::vector<Vertex> spread(const Geometry& g, std::span<const Vertex> f, double alpha,
                                  RngStream& rng, int64_t max_vertices = 0) {
  if (alpha < 0.0 || alpha > 1.0) throw InvalidParams("spread: alpha outside [0, 1]");
  return spread_with(
      g, f, [&](const EdgeId&) { return rng.bernoulli(alpha); }, max_vertices);
}

// L-fold iteration F^{alpha, L}, fresh randomness each round.
inline std::vector<Vertex> iterated_spread(const Geometry& g, std::span<const Vertex> f,
                                           double alpha, int rounds, RngStream& rng,
                                           int64_t max_vertices = 0) {
  if (rounds < 0) throw InvalidParams("iterated_spread: rounds must be >= 0");
  std::vector<Vertex> cur(f.begin(), f.end());
  for (int i = 0; i < rounds; ++i) cur = spread(g, cur, alpha, rng, max_vertices);
  return cur;
}

// Mean largest-cluster fraction over independent configs.
inline double estimate_theta(const Geometry& g, double p, int64_t replicas, RngStream& rng) {
  if (replicas <= 0) throw InvalidParams("estimate_theta: replicas must be positive");
  const double v = static_cast<double>(g.vertex_count());
  double sum = 0.0;
  for (int64_t r = 0; r < replicas; ++r) {
    const EdgeConfig cfg = sample_config(g, p, rng);
    sum += static_cast<double>(cluster_stats(cfg, /*with_diameters=*/false).max_size) / v;
  }
  return sum / static_cast<double>(replicas);
}

}  // namespace dynperc

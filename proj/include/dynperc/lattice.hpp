#pragma once

// Nearest-neighbor lattice geometry: the d-dimensional torus (side n >= 3)
// and the infinite lattice, with a canonical edge naming shared by every
// module. Direction k in [0, 2d) means axis k/2, sign minus for even k and
// plus for odd k; neighbor and incident-edge enumerations follow that order.

#include <array>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

inline constexpr int kMaxDim = 4;

struct Geometry {
  int d = 1;
  int64_t n = 0;  // torus side; 0 means the infinite lattice

  bool torus() const { return n != 0; }

  void validate() const {
    if (d < 1 || d > kMaxDim) throw InvalidParams("dimension must be in [1, 4]");
    if (n != 0 && n < 3) throw InvalidParams("torus side must be >= 3");
  }

  int64_t vertex_count() const {
    if (!torus()) throw InvalidParams("vertex_count needs a torus");
    int64_t v = 1;
    for (int i = 0; i < d; ++i) v *= n;
    return v;
  }

  int64_t edge_count() const { return d * vertex_count(); }

  bool operator==(const Geometry&) const = default;
};

struct Vertex {
  std::array<int64_t, kMaxDim> c{};  // coordinates; entries at index >= d stay zero

  bool operator==(const Vertex&) const = default;
  auto operator<=>(const Vertex&) const = default;
};

// Canonical name of an undirected edge: the endpoint it leaves in the +1
// direction of `axis`. On the torus the base is wrapped into [0, n).
struct EdgeId {
  Vertex base{};
  int axis = 0;

  bool operator==(const EdgeId&) const = default;
  auto operator<=>(const EdgeId&) const = default;
};

struct VertexHash {
  size_t operator()(const Vertex& v) const {
    uint64_t h = 0x9e3779b97f4a7c15ull;
    for (int64_t x : v.c) h = mix64(h ^ static_cast<uint64_t>(x));
    return static_cast<size_t>(h);
  }
};

struct EdgeIdHash {
  size_t operator()(const EdgeId& e) const {
    return static_cast<size_t>(
        mix64(VertexHash{}(e.base) ^ (0xbf58476d1ce4e5b9ull + static_cast<uint64_t>(e.axis))));
  }
};

inline int64_t mod_n(int64_t x, int64_t n) {
  int64_t r = x % n;
  return r < 0 ? r + n : r;
}

inline Vertex wrap(const Geometry& g, Vertex v) {
  if (g.torus())
    for (int i = 0; i < g.d; ++i) v.c[i] = mod_n(v.c[i], g.n);
  return v;
}

// Neighbor in direction k: axis k/2, step -1 for even k, +1 for odd k.
inline Vertex neighbor(const Geometry& g, Vertex x, int direction) {
  const int axis = direction / 2;
  x.c[axis] += (direction & 1) ? 1 : -1;
  return wrap(g, x);
}

inline std::vector<Vertex> neighbors(const Geometry& g, const Vertex& x) {
  std::vector<Vertex> out;
  out.reserve(2 * g.d);
  for (int k = 0; k < 2 * g.d; ++k) out.push_back(neighbor(g, x, k));
  return out;
}

inline bool adjacent(const Geometry& g, const Vertex& x, const Vertex& y) {
  for (int k = 0; k < 2 * g.d; ++k)
    if (neighbor(g, x, k) == y) return true;
  return false;
}

// Canonical edge for the step from x in direction k.
inline EdgeId edge_in_direction(const Geometry& g, const Vertex& x, int direction) {
  if (direction & 1) return EdgeId{wrap(g, x), direction / 2};
  return EdgeId{neighbor(g, x, direction), direction / 2};
}

inline EdgeId edge_between(const Geometry& g, const Vertex& x, const Vertex& y) {
  for (int k = 0; k < 2 * g.d; ++k)
    if (neighbor(g, x, k) == y) return edge_in_direction(g, x, k);
  throw NotAdjacent("edge_between: vertices are not adjacent");
}

// The 2d edges at x, indexed by direction.
inline std::vector<EdgeId> incident_edges(const Geometry& g, const Vertex& x) {
  std::vector<EdgeId> out;
  out.reserve(2 * g.d);
  for (int k = 0; k < 2 * g.d; ++k) out.push_back(edge_in_direction(g, x, k));
  return out;
}

inline int64_t graph_distance(const Geometry& g, const Vertex& x, const Vertex& y) {
  int64_t dist = 0;
  for (int i = 0; i < g.d; ++i) {
    int64_t dx = x.c[i] - y.c[i];
    if (dx < 0) dx = -dx;
    if (g.torus()) {
      dx = mod_n(dx, g.n);
      dist += std::min(dx, g.n - dx);
    } else {
      dist += dx;
    }
  }
  return dist;
}

// Closed ball of radius r in graph distance. BFS; wrap collisions on small
// tori are handled by the visited set.
inline std::vector<Vertex> neighborhood(const Geometry& g, const Vertex& x, int64_t r) {
  if (r < 0) throw InvalidParams("neighborhood radius must be >= 0");
  std::vector<Vertex> out{wrap(g, x)};
  std::unordered_set<Vertex, VertexHash> seen{out[0]};
  size_t frontier_begin = 0;
  for (int64_t depth = 0; depth < r; ++depth) {
    const size_t frontier_end = out.size();
    for (size_t i = frontier_begin; i < frontier_end; ++i)
      for (int k = 0; k < 2 * g.d; ++k) {
        Vertex y = neighbor(g, out[i], k);
        if (seen.insert(y).second) out.push_back(y);
      }
    frontier_begin = frontier_end;
    if (frontier_begin == out.size()) break;
  }
  return out;
}

// Linear vertex index on the torus, coordinate 0 least significant.
inline int64_t vertex_index(const Geometry& g, const Vertex& v) {
  int64_t idx = 0;
  for (int i = g.d - 1; i >= 0; --i) idx = idx * g.n + v.c[i];
  return idx;
}

inline Vertex vertex_at(const Geometry& g, int64_t idx) {
  Vertex v{};
  for (int i = 0; i < g.d; ++i) {
    v.c[i] = idx % g.n;
    idx /= g.n;
  }
  return v;
}

// Linear edge index on the torus: base index major, axis minor.
inline int64_t edge_index(const Geometry& g, const EdgeId& e) {
  return vertex_index(g, e.base) * g.d + e.axis;
}

inline EdgeId edge_at(const Geometry& g, int64_t idx) {
  return EdgeId{vertex_at(g, idx / g.d), static_cast<int>(idx % g.d)};
}

// x shifted by floor(n/2) along every axis; the farthest vertex on odd tori
// too, up to rounding. Default hitting target.
inline Vertex antipode(const Geometry& g, Vertex x) {
  if (!g.torus()) throw InvalidParams("antipode needs a torus");
  for (int i = 0; i < g.d; ++i) x.c[i] = mod_n(x.c[i] + g.n / 2, g.n);
  return x;
}

}  // namespace dynperc

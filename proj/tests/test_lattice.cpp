#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "dynperc/lattice.hpp"

using namespace dynperc;

namespace {

Vertex v1(int64_t x) { return Vertex{{x}}; }
Vertex v2(int64_t x, int64_t y) { return Vertex{{x, y}}; }

}  // namespace

TEST(Geometry, Validation) {
  EXPECT_NO_THROW((Geometry{1, 8}).validate());
  EXPECT_NO_THROW((Geometry{4, 3}).validate());
  EXPECT_NO_THROW((Geometry{2, 0}).validate());  // infinite lattice
  EXPECT_THROW((Geometry{0, 8}).validate(), InvalidParams);
  EXPECT_THROW((Geometry{5, 8}).validate(), InvalidParams);
  EXPECT_THROW((Geometry{1, 2}).validate(), InvalidParams);
  EXPECT_THROW((Geometry{1, -1}).validate(), InvalidParams);
}

TEST(Geometry, Counts) {
  EXPECT_EQ((Geometry{2, 4}).vertex_count(), 16);
  EXPECT_EQ((Geometry{2, 4}).edge_count(), 32);
  EXPECT_EQ((Geometry{3, 3}).vertex_count(), 27);
  EXPECT_EQ((Geometry{3, 3}).edge_count(), 81);
}

TEST(Lattice, ModWrap) {
  EXPECT_EQ(mod_n(-1, 8), 7);
  EXPECT_EQ(mod_n(8, 8), 0);
  EXPECT_EQ(mod_n(-9, 8), 7);
  const Geometry g{2, 5};
  EXPECT_EQ(wrap(g, v2(-1, 7)), v2(4, 2));
}

TEST(Lattice, NeighborsOnCycle) {
  // Direction order: even k is the minus direction on axis k/2, odd k plus.
  const Geometry g{1, 8};
  const auto ns = neighbors(g, v1(0));
  ASSERT_EQ(ns.size(), 2u);
  EXPECT_EQ(ns[0], v1(7));
  EXPECT_EQ(ns[1], v1(1));
}

TEST(Lattice, NeighborsInPlane) {
  const Geometry g{2, 4};
  const auto ns = neighbors(g, v2(0, 0));
  ASSERT_EQ(ns.size(), 4u);
  EXPECT_EQ(ns[0], v2(3, 0));
  EXPECT_EQ(ns[1], v2(1, 0));
  EXPECT_EQ(ns[2], v2(0, 3));
  EXPECT_EQ(ns[3], v2(0, 1));
}

TEST(Lattice, NeighborsInfinite) {
  const Geometry g{2, 0};
  const auto ns = neighbors(g, v2(0, 0));
  ASSERT_EQ(ns.size(), 4u);
  EXPECT_EQ(ns[0], v2(-1, 0));
  EXPECT_EQ(ns[1], v2(1, 0));
}

TEST(Lattice, AdjacencySymmetric) {
  const Geometry g{2, 4};
  for (int64_t i = 0; i < g.vertex_count(); ++i) {
    const Vertex a = vertex_at(g, i);
    for (const Vertex& b : neighbors(g, a)) {
      EXPECT_TRUE(adjacent(g, a, b));
      EXPECT_TRUE(adjacent(g, b, a));
    }
    EXPECT_FALSE(adjacent(g, a, a));
  }
}

TEST(Lattice, EdgeBetweenCanonical) {
  const Geometry g{1, 8};
  // The minus-direction edge is based at the neighbor, so both endpoints
  // name the same edge.
  const EdgeId e1 = edge_between(g, v1(7), v1(0));
  const EdgeId e2 = edge_between(g, v1(0), v1(7));
  EXPECT_EQ(e1.base, v1(7));
  EXPECT_EQ(e1.axis, 0);
  EXPECT_EQ(e1, e2);
  EXPECT_THROW(edge_between(g, v1(0), v1(2)), NotAdjacent);
  EXPECT_THROW(edge_between(g, v1(0), v1(0)), NotAdjacent);
}

TEST(Lattice, EdgeInDirectionMatchesNeighbor) {
  const Geometry g{2, 4};
  const Vertex x = v2(1, 2);
  for (int k = 0; k < 2 * g.d; ++k) {
    const Vertex y = neighbor(g, x, k);
    EXPECT_EQ(edge_in_direction(g, x, k), edge_between(g, x, y));
  }
}

TEST(Lattice, IncidentEdgesAreDistinct) {
  const Geometry g{2, 4};
  const auto es = incident_edges(g, v2(0, 0));
  ASSERT_EQ(es.size(), 4u);
  std::set<std::pair<int64_t, int>> keys;
  for (const EdgeId& e : es) keys.insert({vertex_index(g, e.base), e.axis});
  EXPECT_EQ(keys.size(), 4u);
}

TEST(Lattice, GraphDistance) {
  const Geometry g{2, 4};
  EXPECT_EQ(graph_distance(g, v2(0, 0), v2(0, 0)), 0);
  EXPECT_EQ(graph_distance(g, v2(0, 0), v2(3, 0)), 1);  // wraps
  EXPECT_EQ(graph_distance(g, v2(0, 0), v2(2, 1)), 3);
  EXPECT_EQ(graph_distance(g, v2(0, 0), v2(2, 2)), 4);
  const Geometry inf{2, 0};
  EXPECT_EQ(graph_distance(inf, v2(0, 0), v2(-3, 5)), 8);
}

TEST(Lattice, GraphDistanceIsAMetric) {
  const Geometry g{2, 5};
  for (int64_t i = 0; i < g.vertex_count(); i += 3)
    for (int64_t j = 0; j < g.vertex_count(); j += 3)
      for (int64_t k = 0; k < g.vertex_count(); k += 3) {
        const Vertex a = vertex_at(g, i), b = vertex_at(g, j), c = vertex_at(g, k);
        EXPECT_EQ(graph_distance(g, a, b), graph_distance(g, b, a));
        EXPECT_LE(graph_distance(g, a, c),
                  graph_distance(g, a, b) + graph_distance(g, b, c));
      }
}

TEST(Lattice, VertexIndexRoundTrip) {
  const Geometry g{3, 4};
  for (int64_t i = 0; i < g.vertex_count(); ++i)
    EXPECT_EQ(vertex_index(g, vertex_at(g, i)), i);
  // coordinate 0 is the least significant digit
  EXPECT_EQ(vertex_index(g, Vertex{{1, 0, 0}}), 1);
  EXPECT_EQ(vertex_index(g, Vertex{{0, 1, 0}}), 4);
  EXPECT_EQ(vertex_index(g, Vertex{{0, 0, 1}}), 16);
}

TEST(Lattice, EdgeIndexRoundTrip) {
  const Geometry g{2, 4};
  for (int64_t i = 0; i < g.edge_count(); ++i) {
    const EdgeId e = edge_at(g, i);
    EXPECT_EQ(edge_index(g, e), i);
  }
}

TEST(Lattice, NeighborhoodSizes) {
  const Geometry inf{2, 0};
  // |B_r| in Z^2 is 2r^2 + 2r + 1
  EXPECT_EQ(neighborhood(inf, v2(0, 0), 0).size(), 1u);
  EXPECT_EQ(neighborhood(inf, v2(0, 0), 1).size(), 5u);
  EXPECT_EQ(neighborhood(inf, v2(0, 0), 2).size(), 13u);
  // On a small torus the ball saturates at n^d.
  const Geometry g{2, 3};
  EXPECT_EQ(neighborhood(g, v2(0, 0), 2).size(), 9u);
}

TEST(Lattice, Antipode) {
  EXPECT_EQ(antipode(Geometry{1, 8}, v1(0)), v1(4));
  EXPECT_EQ(antipode(Geometry{1, 8}, v1(6)), v1(2));
  EXPECT_EQ(antipode(Geometry{2, 5}, v2(0, 0)), v2(2, 2));
  EXPECT_THROW(antipode(Geometry{1, 0}, v1(0)), InvalidParams);
}

TEST(Lattice, AntipodeIsFarthestOnEvenTorus) {
  const Geometry g{2, 6};
  const Vertex origin = v2(0, 0);
  const Vertex far = antipode(g, origin);
  const int64_t d_far = graph_distance(g, origin, far);
  for (int64_t i = 0; i < g.vertex_count(); ++i)
    EXPECT_LE(graph_distance(g, origin, vertex_at(g, i)), d_far);
}

TEST(Lattice, HashSpreads) {
  const Geometry g{2, 8};
  std::set<size_t> vhashes, ehashes;
  for (int64_t i = 0; i < g.vertex_count(); ++i)
    vhashes.insert(VertexHash{}(vertex_at(g, i)));
  for (int64_t i = 0; i < g.edge_count(); ++i) ehashes.insert(EdgeIdHash{}(edge_at(g, i)));
  // No collisions at this size; the maps in the simulator rely on this
  // being rare.
  EXPECT_EQ(vhashes.size(), static_cast<size_t>(g.vertex_count()));
  EXPECT_EQ(ehashes.size(), static_cast<size_t>(g.edge_count()));
}

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "dynperc/percolation.hpp"
#include "dynperc/rng.hpp"

using namespace dynperc;

namespace {

Vertex v1(int64_t x) { return Vertex{{x}}; }
Vertex v2(int64_t x, int64_t y) { return Vertex{{x, y}}; }

EdgeConfig all_edges(const Geometry& g, bool open) {
  EdgeConfig cfg{g, std::vector<uint8_t>(static_cast<size_t>(g.edge_count()), open ? 1 : 0)};
  return cfg;
}

// Deterministic edge state from a hash of the edge id: a shared source of
// "uniforms" so openness can be compared across thresholds.
double edge_uniform(const Geometry& g, const EdgeId& e, uint64_t salt) {
  const uint64_t h = mix64(static_cast<uint64_t>(edge_index(g, e)) * 0x9e3779b97f4a7c15ull + salt);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

TEST(Percolation, SampleConfigDensity) {
  const Geometry g{2, 32};
  RngStream rng(11);
  const EdgeConfig cfg = sample_config(g, 0.3, rng);
  ASSERT_EQ(cfg.open.size(), static_cast<size_t>(g.edge_count()));
  int64_t open = 0;
  for (uint8_t b : cfg.open) open += b;
  const double frac = static_cast<double>(open) / static_cast<double>(g.edge_count());
  EXPECT_NEAR(frac, 0.3, 4.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(g.edge_count())));
}

TEST(Percolation, SampleConfigExtremes) {
  const Geometry g{1, 8};
  RngStream rng(1);
  const EdgeConfig closed = sample_config(g, 0.0, rng);
  EXPECT_EQ(std::count(closed.open.begin(), closed.open.end(), 1), 0);
  const EdgeConfig open = sample_config(g, 1.0, rng);
  EXPECT_EQ(std::count(open.open.begin(), open.open.end(), 0), 0);
}

TEST(Percolation, ClusterOfRespectsEdges) {
  // Cycle of 8 with edges open only along 0-1-2: cluster of 0 is {0,1,2}.
  const Geometry g{1, 8};
  EdgeConfig cfg = all_edges(g, false);
  cfg.open[static_cast<size_t>(edge_index(g, edge_between(g, v1(0), v1(1))))] = 1;
  cfg.open[static_cast<size_t>(edge_index(g, edge_between(g, v1(1), v1(2))))] = 1;
  const auto cluster = cluster_of(cfg, v1(0));
  std::set<int64_t> got;
  for (const Vertex& v : cluster) got.insert(v.c[0]);
  EXPECT_EQ(got, (std::set<int64_t>{0, 1, 2}));
}

TEST(Percolation, ClusterOfFullTorus) {
  const Geometry g{2, 4};
  const auto cluster = cluster_of(all_edges(g, true), v2(1, 3));
  EXPECT_EQ(cluster.size(), static_cast<size_t>(g.vertex_count()));
}

TEST(Percolation, LatticeDiameter) {
  const Geometry g{1, 8};
  const std::vector<Vertex> vs{v1(0), v1(1), v1(2)};
  EXPECT_EQ(lattice_diameter(g, vs), 2);
  const std::vector<Vertex> wrapped{v1(7), v1(0), v1(1)};
  EXPECT_EQ(lattice_diameter(g, wrapped), 2);
  EXPECT_EQ(lattice_diameter(g, std::vector<Vertex>{v1(3)}), 0);
}

TEST(Percolation, ClusterStatsAgreesWithBfs) {
  // Union-find sizes must match per-vertex BFS on random configs.
  const Geometry g{2, 6};
  RngStream rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const EdgeConfig cfg = sample_config(g, 0.4, rng);
    const ClusterStats stats = cluster_stats(cfg);
    std::multiset<int64_t> uf_sizes(stats.sizes.begin(), stats.sizes.end());

    std::multiset<int64_t> bfs_sizes;
    std::set<int64_t> visited;
    int64_t bfs_max_diam = 0;
    for (int64_t i = 0; i < g.vertex_count(); ++i) {
      if (visited.contains(i)) continue;
      const auto cluster = cluster_of(cfg, vertex_at(g, i));
      for (const Vertex& v : cluster) visited.insert(vertex_index(g, v));
      bfs_sizes.insert(static_cast<int64_t>(cluster.size()));
      bfs_max_diam = std::max(bfs_max_diam, lattice_diameter(g, cluster));
    }
    ASSERT_EQ(uf_sizes, bfs_sizes);
    ASSERT_EQ(stats.max_diameter, bfs_max_diam);
    int64_t total = 0;
    for (int64_t s : stats.sizes) total += s;
    ASSERT_EQ(total, g.vertex_count());
  }
}

TEST(Percolation, SpreadEmptySeedRejected) {
  const Geometry g{1, 8};
  RngStream rng(1);
  EXPECT_THROW(spread(g, std::vector<Vertex>{}, 0.5, rng), InvalidParams);
}

TEST(Percolation, SpreadAlphaZeroAndOne) {
  const Geometry g{2, 5};
  RngStream rng(2);
  const std::vector<Vertex> seed{v2(0, 0), v2(1, 0)};
  const auto fixed = spread(g, seed, 0.0, rng);
  EXPECT_EQ(fixed.size(), seed.size());
  const auto everything = spread(g, seed, 1.0, rng);
  EXPECT_EQ(everything.size(), static_cast<size_t>(g.vertex_count()));
}

TEST(Percolation, SpreadSkipsInteriorEdges) {
  // Both endpoints in the seed: the edge between them must never be
  // consulted.
  const Geometry g{1, 8};
  std::set<int64_t> consulted;
  const std::vector<Vertex> seed{v1(0), v1(1)};
  spread_with(g, seed, [&](const EdgeId& e) {
    consulted.insert(edge_index(g, e));
    return false;
  });
  EXPECT_FALSE(consulted.contains(edge_index(g, edge_between(g, v1(0), v1(1)))));
  EXPECT_EQ(consulted.size(), 2u);  // only the two outward edges
}

TEST(Percolation, SpreadMonotoneInAlpha) {
  // With shared uniforms, the alpha = 0.3 spread is contained in the
  // alpha = 0.6 spread, configuration by configuration.
  const Geometry g{2, 7};
  const std::vector<Vertex> seed{v2(3, 3)};
  for (uint64_t salt = 0; salt < 30; ++salt) {
    auto open_at = [&](double alpha) {
      return [&, alpha](const EdgeId& e) { return edge_uniform(g, e, salt) < alpha; };
    };
    const auto small = spread_with(g, seed, open_at(0.3));
    const auto large = spread_with(g, seed, open_at(0.6));
    std::set<int64_t> large_set;
    for (const Vertex& v : large) large_set.insert(vertex_index(g, v));
    for (const Vertex& v : small) ASSERT_TRUE(large_set.contains(vertex_index(g, v)));
  }
}

TEST(Percolation, SpreadCapThrows) {
  const Geometry inf{2, 0};
  RngStream rng(3);
  const std::vector<Vertex> seed{v2(0, 0)};
  EXPECT_THROW(spread(inf, seed, 1.0, rng, 100), TooLarge);
}

TEST(Percolation, IteratedSpreadMonotonePerRound) {
  // Each round's output contains its input, so sizes never shrink along
  // one trajectory. Zero rounds is the identity.
  const Geometry g{2, 9};
  RngStream rng(4);
  std::vector<Vertex> cur{v2(4, 4)};
  size_t prev = cur.size();
  for (int round = 0; round < 4; ++round) {
    cur = spread(g, cur, 0.5, rng);
    ASSERT_GE(cur.size(), prev);
    prev = cur.size();
  }
  EXPECT_EQ(iterated_spread(g, std::vector<Vertex>{v2(4, 4)}, 0.9, 0, rng).size(), 1u);
}

TEST(Percolation, ThetaExtremes) {
  const Geometry g{2, 6};
  RngStream rng(5);
  EXPECT_DOUBLE_EQ(estimate_theta(g, 1.0, 10, rng), 1.0);
  EXPECT_DOUBLE_EQ(estimate_theta(g, 0.0, 10, rng),
                   1.0 / static_cast<double>(g.vertex_count()));
}

TEST(Percolation, ThetaMonotoneAcrossPc) {
  // Largest-cluster fraction rises steeply through p_c(Z^2) = 1/2.
  const Geometry g{2, 16};
  RngStream rng(6);
  const double low = estimate_theta(g, 0.3, 200, rng);
  const double high = estimate_theta(g, 0.7, 200, rng);
  EXPECT_LT(low, 0.2);
  EXPECT_GT(high, 0.5);
}

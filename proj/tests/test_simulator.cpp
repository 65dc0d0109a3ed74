#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dynperc/full_engine.hpp"
#include "dynperc/simulator.hpp"
#include "dynperc/stats.hpp"

using namespace dynperc;

namespace {

Vertex v1(int64_t x) { return Vertex{{x}}; }

SimParams params_1d(int64_t n, double p, double mu, uint64_t seed) {
  return SimParams{Geometry{1, n}, p, mu, seed};
}

}  // namespace

TEST(SimParams, Validation) {
  EXPECT_NO_THROW(params_1d(8, 0.5, 1.0, 1).validate());
  EXPECT_THROW(params_1d(8, 0.0, 1.0, 1).validate(), InvalidParams);
  EXPECT_THROW(params_1d(8, 1.0, 1.0, 1).validate(), InvalidParams);
  EXPECT_THROW(params_1d(8, -0.1, 1.0, 1).validate(), InvalidParams);
  EXPECT_THROW(params_1d(8, 0.5, 0.0, 1).validate(), InvalidParams);
  EXPECT_THROW(params_1d(8, 0.5, -2.0, 1).validate(), InvalidParams);
}

TEST(Simulator, MuAboveOneWarns) {
  SimState s = init(params_1d(8, 0.5, 2.0, 1), InitialCondition::at(v1(0)));
  ASSERT_EQ(s.warnings.size(), 1u);
  SimState quiet = init(params_1d(8, 0.5, 1.0, 1), InitialCondition::at(v1(0)));
  EXPECT_TRUE(quiet.warnings.empty());
}

TEST(Simulator, InitKinds) {
  const SimParams p = params_1d(8, 0.5, 1.0, 3);

  SimState at = init(p, InitialCondition::at(v1(5)));
  EXPECT_EQ(at.walker, v1(5));
  EXPECT_TRUE(at.revealed.empty());

  SimState uni = init(p, InitialCondition::stationary_uniform());
  EXPECT_TRUE(uni.revealed.empty());

  SimState all = init(p, InitialCondition::explicit_all(true, v1(2)));
  EXPECT_EQ(all.walker, v1(2));
  EXPECT_EQ(all.revealed.size(), static_cast<size_t>(p.g.edge_count()));
  for (const auto& [e, k] : all.revealed) EXPECT_TRUE(k.open);

  const EdgeId e0 = edge_between(p.g, v1(0), v1(1));
  SimState pat = init(p, InitialCondition::finite_pattern(v1(0), {{e0, true}}));
  ASSERT_EQ(pat.revealed.size(), 1u);
  EXPECT_TRUE(pat.revealed.at(e0).open);
}

TEST(Simulator, InitRejections) {
  const SimParams inf{Geometry{1, 0}, 0.5, 1.0, 1};
  EXPECT_THROW(init(inf, InitialCondition::stationary_uniform()), InvalidParams);
  EXPECT_THROW(init(inf, InitialCondition::explicit_all(true)), InvalidParams);

  const SimParams p = params_1d(8, 0.5, 1.0, 1);
  EXPECT_THROW(init(p, InitialCondition::finite_pattern(v1(0), {})), InvalidParams);
  const EdgeId e0 = edge_between(p.g, v1(0), v1(1));
  EXPECT_THROW(init(p, InitialCondition::finite_pattern(v1(0), {{e0, true}, {e0, false}})),
               InvalidParams);
  EXPECT_THROW(init(p, InitialCondition::finite_pattern(v1(0), {{EdgeId{v1(0), 1}, true}})),
               InvalidParams);
}

TEST(Simulator, DeterministicEventSequence) {
  const SimParams p = params_1d(8, 0.4, 0.7, 99);
  SimState a = init(p, InitialCondition::at(v1(0)));
  SimState b = init(p, InitialCondition::at(v1(0)));
  for (int i = 0; i < 2000; ++i) {
    const EventRecord ra = step(a);
    const EventRecord rb = step(b);
    ASSERT_DOUBLE_EQ(ra.time, rb.time);
    ASSERT_EQ(ra.is_attempt, rb.is_attempt);
    ASSERT_EQ(ra.direction, rb.direction);
    ASSERT_EQ(ra.moved, rb.moved);
    ASSERT_EQ(a.walker, b.walker);
  }
  EXPECT_EQ(a.attempts, b.attempts);
  EXPECT_EQ(a.refreshes, b.refreshes);
}

TEST(Simulator, TimeAdvancesMonotonically) {
  SimState s = init(params_1d(8, 0.5, 1.0, 7), InitialCondition::at(v1(0)));
  double last = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const EventRecord rec = step(s);
    ASSERT_GE(rec.time, last);
    last = rec.time;
  }
  EXPECT_EQ(s.time, last);
}

TEST(Simulator, MovesOnlyThroughOpenEdges) {
  SimState s = init(params_1d(8, 0.3, 0.5, 11), InitialCondition::at(v1(0)));
  Vertex before = s.walker;
  for (int i = 0; i < 5000; ++i) {
    const EventRecord rec = step(s);
    if (!rec.is_attempt) {
      ASSERT_EQ(s.walker, before);
      continue;
    }
    if (rec.moved) {
      ASSERT_TRUE(rec.edge_open);
      ASSERT_EQ(s.walker, neighbor(s.params.g, before, rec.direction));
    } else {
      ASSERT_FALSE(rec.edge_open);
      ASSERT_EQ(s.walker, before);
    }
    before = s.walker;
  }
}

TEST(Simulator, DistanceBoundedByMoves) {
  // Per trajectory: graph distance from start <= moves <= attempts.
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    SimState s = init(params_1d(64, 0.5, 0.5, seed), InitialCondition::at(v1(0)));
    run_until(s, 50.0);
    const int64_t dist = graph_distance(s.params.g, v1(0), s.walker);
    ASSERT_LE(static_cast<uint64_t>(dist), s.moves);
    ASSERT_LE(s.moves, s.attempts);
  }
}

TEST(Simulator, LiftedPositionProjectsToWalker) {
  SimState s = init(params_1d(8, 0.5, 1.0, 13), InitialCondition::at(v1(3)));
  run_until(s, 200.0);
  EXPECT_EQ(mod_n(3 + s.lifted[0], 8), s.walker.c[0]);
}

TEST(Simulator, AttemptRateIsOne) {
  // Attempts by time t are Poisson(t) regardless of environment.
  const double t = 40.0;
  const int reps = 400;
  std::vector<double> counts;
  for (int r = 0; r < reps; ++r) {
    SimState s = init(params_1d(8, 0.3, 0.5, 1000 + static_cast<uint64_t>(r)),
                      InitialCondition::at(v1(0)));
    run_until(s, t);
    counts.push_back(static_cast<double>(s.attempts));
  }
  const MeanCi mc = mean_ci(counts);
  EXPECT_NEAR(mc.mean, t, 3.0 * std::sqrt(t / reps) * 1.96);
}

TEST(Simulator, RefreshForgetsEdge) {
  SimState s = init(params_1d(8, 0.5, 4.0, 17), InitialCondition::at(v1(0)));
  int seen_refresh = 0;
  for (int i = 0; i < 3000; ++i) {
    const EventRecord rec = step(s);
    if (!rec.is_attempt) {
      ++seen_refresh;
      ASSERT_FALSE(s.revealed.contains(rec.edge));
    }
  }
  EXPECT_GT(seen_refresh, 0);
  EXPECT_EQ(static_cast<uint64_t>(seen_refresh), s.refreshes);
}

TEST(Simulator, RevealedNeverExceedsAttemptedEdges) {
  SimState s = init(params_1d(32, 0.5, 0.25, 19), InitialCondition::at(v1(0)));
  for (int i = 0; i < 4000; ++i) {
    step(s);
    ASSERT_LE(s.revealed.size(), static_cast<size_t>(s.params.g.edge_count()));
    ASSERT_LE(s.revealed.size(), s.attempts + 1);
  }
}

TEST(Simulator, RunUntilGuards) {
  SimState s = init(params_1d(8, 0.5, 1.0, 1), InitialCondition::at(v1(0)));
  run_until(s, 10.0);
  EXPECT_DOUBLE_EQ(s.time, 10.0);
  EXPECT_THROW(run_until(s, 5.0), InvalidParams);
  EXPECT_THROW(run_until(s, kMaxHorizon * 2.0), InvalidParams);
  EXPECT_NO_THROW(run_until(s, 10.0));  // no-op, not backwards
}

TEST(Simulator, RevealAdjacentMaterializesIncidentEdges) {
  SimState s = init(params_1d(8, 0.5, 1.0, 23), InitialCondition::at(v1(0)));
  reveal_adjacent(s);
  EXPECT_EQ(s.revealed.size(), 2u);
  for (int k = 0; k < 2; ++k)
    EXPECT_TRUE(s.revealed.contains(edge_in_direction(s.params.g, s.walker, k)));
  // Idempotent: no second draw for already revealed edges.
  const auto snapshot = s.revealed;
  reveal_adjacent(s);
  EXPECT_EQ(s.revealed.size(), snapshot.size());
  for (const auto& [e, k] : snapshot) EXPECT_EQ(s.revealed.at(e).open, k.open);
}

TEST(Simulator, FreshRegenerationProbability) {
  // From a fresh environment the pinned-state check succeeds iff all 2d
  // incident Bernoulli(p) edges come up closed: probability (1-p)^(2d).
  const double p = 0.3;
  const int reps = 20000;
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    SimState s = init(SimParams{Geometry{2, 5}, p, 1.0, 40000 + static_cast<uint64_t>(r)},
                      InitialCondition::at(Vertex{{0, 0}}));
    if (is_regenerative(s)) ++hits;
  }
  const double expect = std::pow(1.0 - p, 4);
  const double got = static_cast<double>(hits) / reps;
  EXPECT_NEAR(got, expect, 4.0 * std::sqrt(expect * (1.0 - expect) / reps));
}

TEST(Simulator, RegenerativeRequiresExactlyIncidentClosed) {
  const SimParams p = params_1d(8, 0.5, 1.0, 29);
  // All edges revealed: the revealed set is bigger than the incident pair.
  SimState all = init(p, InitialCondition::explicit_all(false, v1(0)));
  EXPECT_FALSE(is_regenerative(all));
  // Exactly the incident pair, closed.
  const EdgeId left = edge_in_direction(p.g, v1(0), 0);
  const EdgeId right = edge_in_direction(p.g, v1(0), 1);
  SimState pinned = init(p, InitialCondition::finite_pattern(v1(0), {{left, false}, {right, false}}));
  EXPECT_TRUE(is_regenerative(pinned));
  SimState open_one =
      init(p, InitialCondition::finite_pattern(v1(0), {{left, false}, {right, true}}));
  EXPECT_FALSE(is_regenerative(open_one));
}

TEST(Simulator, StationaryWalkerStaysUniform) {
  // Uniform walker + fresh environment is stationary: the walker marginal
  // at a later time is still uniform (chi-square).
  const SimParams base = params_1d(6, 0.4, 0.5, 0);
  const int reps = 12000;
  std::vector<int64_t> counts(6, 0);
  for (int r = 0; r < reps; ++r) {
    SimParams p = base;
    p.seed = derive_seed(5, 90, 0, static_cast<uint64_t>(r));
    SimState s = init(p, InitialCondition::stationary_uniform());
    run_until(s, 3.0);
    counts[static_cast<size_t>(s.walker.c[0])] += 1;
  }
  double stat = 0.0;
  const double expect = static_cast<double>(reps) / 6.0;
  for (int64_t c : counts) {
    const double diff = static_cast<double>(c) - expect;
    stat += diff * diff / expect;
  }
  EXPECT_GT(chi_square_pvalue(stat, 5), 1e-4);
}

TEST(Simulator, InfiniteLatticeWalk) {
  SimState s = init(SimParams{Geometry{2, 0}, 0.4, 0.5, 31},
                    InitialCondition::at(Vertex{{0, 0}}));
  run_until(s, 100.0);
  EXPECT_GT(s.attempts, 50u);
  // Lift equals position on the infinite lattice.
  EXPECT_EQ(s.walker.c[0], s.lifted[0]);
  EXPECT_EQ(s.walker.c[1], s.lifted[1]);
}

TEST(FullEngine, MatchesLazyEngineInLaw) {
  // Same-law check: empirical walker marginals of the two engines at a
  // fixed time are close in TV. They use different randomness layouts, so
  // only distributions are comparable.
  const SimParams base = params_1d(6, 0.35, 0.5, 0);
  const double t = 4.0;
  const int reps = 20000;
  std::vector<double> lazy_counts(6, 0.0), full_counts(6, 0.0);
  for (int r = 0; r < reps; ++r) {
    SimParams p = base;
    p.seed = derive_seed(7, 91, 0, static_cast<uint64_t>(r));
    SimState s = init(p, InitialCondition::at(v1(0)));
    run_until(s, t);
    lazy_counts[static_cast<size_t>(s.walker.c[0])] += 1.0;

    p.seed = derive_seed(7, 92, 0, static_cast<uint64_t>(r));
    FullState f = full_init(p, InitialCondition::at(v1(0)));
    full_run_until(f, t);
    full_counts[static_cast<size_t>(f.walker.c[0])] += 1.0;
  }
  double tv = 0.0;
  for (int i = 0; i < 6; ++i) tv += std::abs(lazy_counts[i] - full_counts[i]);
  tv /= 2.0 * reps;
  // Sampling noise alone is ~sqrt(6/reps) per comparison; 0.02 is 2x slack.
  EXPECT_LT(tv, 0.02);
}

TEST(FullEngine, EdgeDensityIsStationary) {
  // The full engine keeps every edge at Bernoulli(p) marginally.
  const SimParams p{Geometry{2, 8}, 0.3, 1.0, 41};
  FullState f = full_init(p, InitialCondition::at(Vertex{{0, 0}}));
  full_run_until(f, 20.0);
  int64_t open = 0;
  for (uint8_t b : f.open) open += b;
  const double frac = static_cast<double>(open) / static_cast<double>(p.g.edge_count());
  EXPECT_NEAR(frac, 0.3, 5.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(p.g.edge_count())));
}

TEST(FullEngine, RejectsInfiniteLattice) {
  const SimParams inf{Geometry{1, 0}, 0.5, 1.0, 1};
  EXPECT_THROW(full_init(inf, InitialCondition::at(v1(0))), InvalidParams);
}

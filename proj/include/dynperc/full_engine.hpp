#pragma once

// Non-lazy reference engine: every edge of the torus is materialized and
// carries its own refresh clock. Same law as the lazy engine, wildly more
// events (rate mu per edge, everywhere), so it is capped to small systems
// and exists to cross-check the lazy engine and the exact solver.
//
// Randomness order: init draws the walker (uniform start only), then per
// edge in ascending edge_index its Bernoulli(p) state (unless forced by the
// initial condition) and its first exponential(mu) refresh gap, then the
// first attempt gap. A refresh event draws the new state then the next gap;
// an attempt draws the next attempt gap then the direction.

#include <cstdint>
#include <queue>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"
#include "dynperc/simulator.hpp"

namespace dynperc {

inline constexpr int64_t kFullEngineMaxEdges = 1000000;

struct FullState {
  SimParams params;
  double time = 0.0;
  Vertex walker{};
  std::array<int64_t, kMaxDim> lifted{};
  uint64_t attempts = 0;
  uint64_t moves = 0;
  uint64_t refreshes = 0;
  std::vector<uint8_t> open;  // all edges, indexed by edge_index
  RngStream rng{0};
  // (time, edge_index) min-heap; edge_index -1 is the walker attempt.
  std::priority_queue<std::pair<double, int64_t>, std::vector<std::pair<double, int64_t>>,
                      std::greater<>>
      queue;
};

inline FullState full_init(const SimParams& params, const InitialCondition& ic) {
  params.validate();
  if (!params.g.torus()) throw InvalidParams("full engine needs a torus");
  const int64_t ne = params.g.edge_count();
  if (ne > kFullEngineMaxEdges) throw TooLarge("full engine: edge count beyond budget");

  FullState s;
  s.params = params;
  s.rng = RngStream(params.seed);
  const Geometry& g = params.g;

  std::vector<int8_t> forced(static_cast<size_t>(ne), -1);
  switch (ic.kind) {
    case InitKind::StationaryUniformWalker:
      s.walker = vertex_at(g, static_cast<int64_t>(s.rng.uniform_int(
                                  static_cast<uint64_t>(g.vertex_count()))));
      break;
    case InitKind::StationaryWalkerAt:
      s.walker = wrap(g, ic.walker);
      break;
    case InitKind::ExplicitAll:
      s.walker = wrap(g, ic.walker);
      for (auto& f : forced) f = ic.all_open ? 1 : 0;
      break;
    case InitKind::FinitePattern: {
      if (ic.pattern.empty())
        throw InvalidParams("FinitePattern: empty pattern map (use StationaryWalkerAt)");
      s.walker = wrap(g, ic.walker);
      for (const auto& [e, open] : ic.pattern) {
        const EdgeId canon{wrap(g, e.base), e.axis};
        if (canon.axis < 0 || canon.axis >= g.d)
          throw InvalidParams("FinitePattern: edge axis outside [0, d)");
        auto& slot = forced[static_cast<size_t>(edge_index(g, canon))];
        if (slot != -1) throw InvalidParams("FinitePattern: duplicate edge");
        slot = open ? 1 : 0;
      }
      break;
    }
  }

  s.open.resize(static_cast<size_t>(ne));
  for (int64_t i = 0; i < ne; ++i) {
    const int8_t f = forced[static_cast<size_t>(i)];
    s.open[static_cast<size_t>(i)] = f >= 0 ? static_cast<uint8_t>(f)
                                            : (s.rng.bernoulli(params.p) ? 1 : 0);
    s.queue.emplace(s.rng.exponential(params.mu), i);
  }
  s.queue.emplace(s.rng.exponential(1.0), int64_t{-1});
  return s;
}

inline EventRecord full_step(FullState& s) {
  const auto [t, idx] = s.queue.top();
  s.queue.pop();
  s.time = t;

  EventRecord rec;
  rec.time = t;
  if (idx >= 0) {
    s.open[static_cast<size_t>(idx)] = s.rng.bernoulli(s.params.p) ? 1 : 0;
    s.queue.emplace(t + s.rng.exponential(s.params.mu), idx);
    ++s.refreshes;
    rec.edge = edge_at(s.params.g, idx);
    return rec;
  }

  rec.is_attempt = true;
  ++s.attempts;
  s.queue.emplace(t + s.rng.exponential(1.0), int64_t{-1});
  const int dir = static_cast<int>(s.rng.uniform_int(static_cast<uint64_t>(2 * s.params.g.d)));
  rec.direction = dir;
  rec.edge = edge_in_direction(s.params.g, s.walker, dir);
  rec.edge_was_revealed = true;
  rec.edge_open = s.open[static_cast<size_t>(edge_index(s.params.g, rec.edge))] != 0;
  if (rec.edge_open) {
    s.walker = neighbor(s.params.g, s.walker, dir);
    s.lifted[static_cast<size_t>(dir / 2)] += (dir & 1) ? 1 : -1;
    ++s.moves;
    rec.moved = true;
  }
  return rec;
}

inline void full_run_until(FullState& s, double t) {
  if (t > kMaxHorizon) throw InvalidParams("run_until: horizon beyond 2^40");
  if (t < s.time) throw InvalidParams("run_until: target before current time");
  while (s.queue.top().first <= t) full_step(s);
  s.time = t;
}

}  // namespace dynperc

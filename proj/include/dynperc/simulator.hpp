#pragma once

// Exact event-driven simulation of a random walk on dynamically refreshing
// bond percolation. Edges refresh at rate mu, re-sampling open with
// probability p; the walker attempts a uniformly random incident edge at
// rate 1 and crosses iff that edge is currently open.
//
// The engine is lazy: an edge's state is materialized ("revealed") only when
// the walker attempts it or a caller asks for it. Conditioned on everything
// observed so far, every unrevealed edge is an independent Bernoulli(p), so
// sampling it on first contact reproduces the exact law. A revealed edge
// owns one pending refresh event; when that fires, the edge is forgotten
// entirely and returns to the unrevealed pool. Refreshes of unrevealed edges
// never need simulating: they map the Bernoulli(p) pool to itself.
//
// The revealed set is therefore exactly the set of edges attempted (or
// force-revealed) and not yet refreshed since, which is the regeneration
// bookkeeping the estimators consume.
//
// Invalidation is lazy too: re-revealing an edge bumps a generation counter,
// and a popped refresh event whose generation does not match the live entry
// is discarded silently.
//
// Randomness is consumed in a fixed order so that a seed pins the full
// trajectory. Per attempt: (1) exponential(1) gap to the next attempt,
// (2) direction, (3) if the attempted edge was unrevealed, its Bernoulli(p)
// state followed by its exponential(mu) refresh gap. reveal_adjacent draws
// per edge, direction order, the same (state, refresh gap) pair.

#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

// Longest admissible model time. Beyond this, spacing between adjacent
// doubles exceeds fixed interarrival quantiles and event ordering degrades.
inline constexpr double kMaxHorizon = 1099511627776.0;  // 2^40

struct SimParams {
  Geometry g;
  double p = 0.5;   // open probability, must be strictly inside (0, 1)
  double mu = 1.0;  // refresh rate, must be positive
  uint64_t seed = 0;

  void validate() const {
    g.validate();
    if (!(p > 0.0 && p < 1.0)) throw InvalidParams("p must lie strictly in (0, 1)");
    if (!(mu > 0.0)) throw InvalidParams("mu must be positive");
  }
};

enum class InitKind {
  StationaryUniformWalker,  // walker uniform on the torus, every edge unrevealed
  StationaryWalkerAt,       // walker fixed, every edge unrevealed
  ExplicitAll,              // walker fixed, every edge revealed in one state (torus)
  FinitePattern,            // walker fixed, listed edges revealed, rest unrevealed
};

struct InitialCondition {
  InitKind kind = InitKind::StationaryWalkerAt;
  Vertex walker{};
  bool all_open = false;                            // ExplicitAll
  std::vector<std::pair<EdgeId, bool>> pattern;     // FinitePattern, duplicate edges rejected

  static InitialCondition stationary_uniform() {
    return {InitKind::StationaryUniformWalker, {}, false, {}};
  }
  static InitialCondition at(Vertex v) { return {InitKind::StationaryWalkerAt, v, false, {}}; }
  static InitialCondition explicit_all(bool open, Vertex v = {}) {
    return {InitKind::ExplicitAll, v, open, {}};
  }
  static InitialCondition finite_pattern(Vertex v, std::vector<std::pair<EdgeId, bool>> edges) {
    return {InitKind::FinitePattern, v, false, std::move(edges)};
  }
};

struct EdgeKnowledge {
  bool open = false;
  uint64_t generation = 0;
};

namespace detail {

enum class EventKind : uint8_t { Attempt = 0, Refresh = 1 };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Attempt;
  EdgeId edge{};             // Refresh only
  uint64_t generation = 0;   // Refresh only; unique per scheduled refresh
};

// Min-heap order; generation (unique across refresh events) breaks exact
// time ties deterministically.
struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.generation > b.generation;
  }
};

}  // namespace detail

struct EventRecord {
  double time = 0.0;
  bool is_attempt = false;        // false: a revealed edge refreshed away
  // attempt fields
  int direction = -1;
  EdgeId edge{};
  bool edge_was_revealed = false; // state came from the revealed set, no draw
  bool edge_open = false;
  bool moved = false;
};

struct SimState {
  SimParams params;
  double time = 0.0;
  Vertex walker{};
  std::array<int64_t, kMaxDim> lifted{};  // cumulative signed moves: the Z^d lift
  uint64_t attempts = 0;
  uint64_t moves = 0;
  uint64_t refreshes = 0;
  uint64_t stale_discarded = 0;
  std::unordered_map<EdgeId, EdgeKnowledge, EdgeIdHash> revealed;
  RngStream rng{0};
  std::priority_queue<detail::Event, std::vector<detail::Event>, detail::EventAfter> queue;
  uint64_t next_generation = 1;
  std::vector<std::string> warnings;
};

namespace detail {

inline void reveal_edge(SimState& s, const EdgeId& e, bool open) {
  const uint64_t gen = s.next_generation++;
  s.revealed[e] = EdgeKnowledge{open, gen};
  s.queue.push(Event{s.time + s.rng.exponential(s.params.mu), EventKind::Refresh, e, gen});
}

// Sample-and-reveal for an edge known to be unrevealed: Bernoulli(p) state,
// then the refresh gap.
inline bool reveal_fresh_edge(SimState& s, const EdgeId& e) {
  const bool open = s.rng.bernoulli(s.params.p);
  reveal_edge(s, e, open);
  return open;
}

// Drop queue heads whose generation no longer matches a live revealed entry.
inline void discard_stale(SimState& s) {
  while (!s.queue.empty()) {
    const Event& ev = s.queue.top();
    if (ev.kind != EventKind::Refresh) return;
    auto it = s.revealed.find(ev.edge);
    if (it != s.revealed.end() && it->second.generation == ev.generation) return;
    s.queue.pop();
    ++s.stale_discarded;
  }
}

}  // namespace detail

inline SimState init(const SimParams& params, const InitialCondition& ic) {
  params.validate();
  SimState s;
  s.params = params;
  s.rng = RngStream(params.seed);
  if (params.mu > 1.0)
    s.warnings.push_back("mu > 1.0: outside the regime the estimates are calibrated for");

  const Geometry& g = params.g;
  switch (ic.kind) {
    case InitKind::StationaryUniformWalker:
      if (!g.torus())
        throw InvalidParams("StationaryUniformWalker needs a torus");
      s.walker = vertex_at(g, static_cast<int64_t>(s.rng.uniform_int(
                                  static_cast<uint64_t>(g.vertex_count()))));
      break;
    case InitKind::StationaryWalkerAt:
      s.walker = wrap(g, ic.walker);
      break;
    case InitKind::ExplicitAll: {
      if (!g.torus()) throw InvalidParams("ExplicitAll needs a torus");
      s.walker = wrap(g, ic.walker);
      const int64_t ne = g.edge_count();
      s.revealed.reserve(static_cast<size_t>(ne));
      for (int64_t i = 0; i < ne; ++i) detail::reveal_edge(s, edge_at(g, i), ic.all_open);
      break;
    }
    case InitKind::FinitePattern: {
      if (ic.pattern.empty())
        throw InvalidParams("FinitePattern: empty pattern map (use StationaryWalkerAt)");
      s.walker = wrap(g, ic.walker);
      for (const auto& [e, open] : ic.pattern) {
        const EdgeId canon{wrap(g, e.base), e.axis};
        if (canon.axis < 0 || canon.axis >= g.d)
          throw InvalidParams("FinitePattern: edge axis outside [0, d)");
        if (s.revealed.contains(canon)) throw InvalidParams("FinitePattern: duplicate edge");
        detail::reveal_edge(s, canon, open);
      }
      break;
    }
  }
  s.queue.push(detail::Event{s.rng.exponential(1.0), detail::EventKind::Attempt, {}, 0});
  return s;
}

// Earliest pending valid event. The queue always holds the next attempt, so
// this never runs dry.
inline double next_event_time(SimState& s) {
  detail::discard_stale(s);
  return s.queue.top().time;
}

// Process exactly one valid event and return what happened.
inline EventRecord step(SimState& s) {
  detail::discard_stale(s);
  const detail::Event ev = s.queue.top();
  s.queue.pop();
  s.time = ev.time;

  EventRecord rec;
  rec.time = ev.time;
  if (ev.kind == detail::EventKind::Refresh) {
    // Forget the edge: back to the unrevealed Bernoulli(p) pool.
    s.revealed.erase(ev.edge);
    ++s.refreshes;
    rec.edge = ev.edge;
    return rec;
  }

  rec.is_attempt = true;
  ++s.attempts;
  s.queue.push(detail::Event{s.time + s.rng.exponential(1.0), detail::EventKind::Attempt, {}, 0});
  const int dir = static_cast<int>(s.rng.uniform_int(static_cast<uint64_t>(2 * s.params.g.d)));
  rec.direction = dir;
  rec.edge = edge_in_direction(s.params.g, s.walker, dir);
  auto it = s.revealed.find(rec.edge);
  if (it != s.revealed.end()) {
    rec.edge_was_revealed = true;
    rec.edge_open = it->second.open;
  } else {
    rec.edge_open = detail::reveal_fresh_edge(s, rec.edge);
  }
  if (rec.edge_open) {
    s.walker = neighbor(s.params.g, s.walker, dir);
    s.lifted[static_cast<size_t>(dir / 2)] += (dir & 1) ? 1 : -1;
    ++s.moves;
    rec.moved = true;
  }
  return rec;
}

// Advance model time to t, processing every event in (time, t].
inline void run_until(SimState& s, double t) {
  if (t > kMaxHorizon) throw InvalidParams("run_until: horizon beyond 2^40");
  if (t < s.time) throw InvalidParams("run_until: target before current time");
  while (next_event_time(s) <= t) step(s);
  s.time = t;
}

// Materialize the walker's 2d incident edges that are still unrevealed, in
// direction order. Law-preserving: it draws exactly the conditional law of
// those edges given the observed history.
inline void reveal_adjacent(SimState& s) {
  for (int k = 0; k < 2 * s.params.g.d; ++k) {
    const EdgeId e = edge_in_direction(s.params.g, s.walker, k);
    if (!s.revealed.contains(e)) detail::reveal_fresh_edge(s, e);
  }
}

// True iff, after revealing the incident edges, the revealed set is exactly
// those 2d edges and all of them are closed: the walker is pinned and the
// rest of the environment carries no information.
inline bool is_regenerative(SimState& s) {
  reveal_adjacent(s);
  const int deg = 2 * s.params.g.d;
  if (s.revealed.size() != static_cast<size_t>(deg)) return false;
  for (int k = 0; k < deg; ++k) {
    auto it = s.revealed.find(edge_in_direction(s.params.g, s.walker, k));
    if (it == s.revealed.end() || it->second.open) return false;
  }
  return true;
}

}  // namespace dynperc

#pragma once

// Two couplings: the classical lazy-walk coupling on the torus that meets
// in O(n^2) steps, and the simultaneous-regeneration time of two
// independent environment-walker copies observed on refresh-scale blocks.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/estimators.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"
#include "dynperc/simulator.hpp"
#include "dynperc/stats.hpp"

namespace dynperc {

// One-step outcome tally for a single walker: index 2*axis + (sign > 0)
// for a move, index 2d for staying put.
using LsrwTally = std::array<int64_t, 2 * kMaxDim + 1>;

// Coupled step rule, per step: draw a coordinate uniformly. If the walkers
// agree there, they stay together with probability 1/2 and otherwise move
// together, +1 or -1 with probability 1/4 each. If they disagree, a
// uniformly chosen one of the two moves +1 or -1 with probability 1/2 each
// and the other stays. Each walker alone is a lazy simple random walk, and
// coordinates that agree never separate again.
//
// Draw order per step: coordinate (uniform_int d), then one uniform_int(4)
// resolving laziness/sign (agreeing) or walker choice/sign (disagreeing).
//
// Returns the number of steps until the walkers coincide.
inline int64_t lsrw_coupled_meet_once(const Geometry& g, Vertex a, Vertex b, RngStream& rng,
                                      int64_t max_steps, LsrwTally* tally_a = nullptr) {
  g.validate();
  if (!g.torus()) throw InvalidParams("lsrw coupling needs a torus");
  a = wrap(g, a);
  b = wrap(g, b);
  int64_t steps = 0;
  while (a != b) {
    if (steps >= max_steps) throw Timeout("lsrw coupling ran out of steps");
    const int axis = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(g.d)));
    const uint64_t r = rng.uniform_int(4);
    int move_a = 0;  // -1, 0, +1 along axis
    int move_b = 0;
    if (a.c[axis] == b.c[axis]) {
      if (r >= 2) move_a = move_b = (r == 2) ? 1 : -1;
    } else {
      const int sign = (r & 2) ? 1 : -1;
      ((r & 1) ? move_b : move_a) = sign;
    }
    a.c[axis] = mod_n(a.c[axis] + move_a, g.n);
    b.c[axis] = mod_n(b.c[axis] + move_b, g.n);
    if (tally_a) {
      const size_t slot = move_a == 0 ? static_cast<size_t>(2 * g.d)
                                      : static_cast<size_t>(2 * axis + (move_a > 0 ? 1 : 0));
      ++(*tally_a)[slot];
    }
    ++steps;
  }
  return steps;
}

struct MeetEstimate {
  double mean_steps = 0.0;
  double ci_half = 0.0;
  int64_t pairs = 0;
  std::vector<double> steps;  // per-pair meeting step counts, in pair order
  LsrwTally tally{};          // pooled one-step outcomes of walker a
};

inline MeetEstimate lsrw_coupled_meet(const Geometry& g, const Vertex& a, const Vertex& b,
                                      int64_t pairs, int64_t max_steps, const ReplicaPlan& plan) {
  if (pairs <= 0) throw InvalidParams("pairs must be positive");
  if (max_steps <= 0) max_steps = 10000000;
  std::vector<double> steps(static_cast<size_t>(pairs));
  std::vector<LsrwTally> tallies(static_cast<size_t>(pairs), LsrwTally{});
  detail::parallel_replicas(pairs, plan.workers, [&](int64_t r) {
    RngStream rng(plan.seed_for(static_cast<uint64_t>(r)));
    steps[static_cast<size_t>(r)] = static_cast<double>(
        lsrw_coupled_meet_once(g, a, b, rng, max_steps, &tallies[static_cast<size_t>(r)]));
  });
  MeetEstimate out;
  out.pairs = pairs;
  const MeanCi mc = mean_ci(steps);
  out.mean_steps = mc.mean;
  out.ci_half = mc.ci_half;
  out.steps = std::move(steps);
  for (const auto& t : tallies)
    for (size_t i = 0; i < t.size(); ++i) out.tally[i] += t[i];
  return out;
}

// Chi-square statistic of a pooled one-step tally against the lazy-walk law:
// stay 1/2, each of the 2d moves 1/(4d). Returns the upper-tail p-value.
inline double lsrw_marginal_pvalue(const Geometry& g, const LsrwTally& tally) {
  const int cells = 2 * g.d + 1;
  int64_t total = 0;
  for (int i = 0; i < cells; ++i) total += tally[static_cast<size_t>(i)];
  if (total < 100) throw InsufficientData("lsrw_marginal_pvalue: too few steps");
  double stat = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double expect =
        static_cast<double>(total) * (i == 2 * g.d ? 0.5 : 0.25 / static_cast<double>(g.d));
    const double diff = static_cast<double>(tally[static_cast<size_t>(i)]) - expect;
    stat += diff * diff / expect;
  }
  return chi_square_pvalue(stat, cells - 1);
}

struct T1Estimate {
  double mean_blocks = 0.0;
  double ci_half = 0.0;
  double block_time = 0.0;
  int64_t pairs_completed = 0;
  int64_t pairs_timed_out = 0;     // excluded from the mean
  std::vector<int64_t> t1_blocks;  // per pair, -1 where the block budget ran out
};

// First block index k >= 1 at which two independent copies are both in the
// pinned state when observed at k * (c_obs / mu). Pair j uses replica
// streams 2j and 2j+1. Timed-out pairs are reported, not averaged; all
// pairs timing out is an error.
inline T1Estimate simultaneous_regeneration_time(const SimParams& base,
                                                 const InitialCondition& ic, double c_obs,
                                                 int64_t pairs, int64_t max_blocks,
                                                 const ReplicaPlan& plan) {
  base.validate();
  if (!(c_obs > 0.0)) throw InvalidParams("c_obs must be positive");
  if (pairs <= 0) throw InvalidParams("pairs must be positive");
  if (max_blocks <= 0) max_blocks = 100000;
  const double block = c_obs / base.mu;
  std::vector<int64_t> t1(static_cast<size_t>(pairs), -1);
  detail::parallel_replicas(pairs, plan.workers, [&](int64_t j) {
    SimParams pa = base, pb = base;
    pa.seed = plan.seed_for(static_cast<uint64_t>(2 * j));
    pb.seed = plan.seed_for(static_cast<uint64_t>(2 * j + 1));
    SimState a = init(pa, ic), b = init(pb, ic);
    for (int64_t k = 1; k <= max_blocks; ++k) {
      const double t = static_cast<double>(k) * block;
      run_until(a, t);
      run_until(b, t);
      const bool ra = is_regenerative(a);
      const bool rb = is_regenerative(b);
      if (ra && rb) {
        t1[static_cast<size_t>(j)] = k;
        return;
      }
    }
  });
  T1Estimate out;
  out.block_time = block;
  std::vector<double> done;
  for (int64_t v : t1) {
    if (v < 0)
      ++out.pairs_timed_out;
    else
      done.push_back(static_cast<double>(v));
  }
  out.pairs_completed = static_cast<int64_t>(done.size());
  out.t1_blocks = std::move(t1);
  if (done.empty()) throw Timeout("simultaneous regeneration: every pair hit the block budget");
  const MeanCi mc = mean_ci(done);
  out.mean_blocks = mc.mean;
  out.ci_half = mc.ci_half;
  return out;
}

}  // namespace dynperc

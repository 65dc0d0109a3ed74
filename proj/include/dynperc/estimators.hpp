#pragma once

// Monte Carlo estimators over the lazy engine. Every estimator derives one
// stream per replica from (master seed, experiment id, grid index, replica)
// and merges results in replica order, so the worker count never touches
// the output bytes. Auxiliary randomness (TV baseline, bootstrap) lives on
// streams with replica indices offset by kAuxReplicaBase.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/rng.hpp"
#include "dynperc/simulator.hpp"
#include "dynperc/stats.hpp"

namespace dynperc {

enum class ExperimentId : uint64_t {
  Msd = 1,
  Mix = 2,
  Hit = 3,
  Excursions = 4,
  Sigma2 = 5,
  Oracle = 6,
  Perc = 7,
  Couple = 8,
  Freeze = 9,
  Trace = 10,
};

struct ReplicaPlan {
  uint64_t master_seed = 1;
  uint64_t experiment_id = 0;
  uint64_t grid_index = 0;
  int workers = 1;

  uint64_t seed_for(uint64_t replica) const {
    return derive_seed(master_seed, experiment_id, grid_index, replica);
  }
  uint64_t aux_seed(uint64_t k) const { return seed_for(kAuxReplicaBase + k); }
};

namespace detail {

// Run fn(r) for r in [0, replicas) on up to `workers` threads. fn writes
// only its own slot; the first exception wins and is rethrown after join.
template <class Fn>
void parallel_replicas(int64_t replicas, int workers, Fn&& fn) {
  if (replicas <= 0) throw InvalidParams("replicas must be positive");
  if (workers == 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 1 || replicas == 1) {
    for (int64_t r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int64_t r = next.fetch_add(1);
      if (r >= replicas) return;
      try {
        fn(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = static_cast<int>(std::min<int64_t>(workers, replicas));
  pool.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidParams("time grid must be nonempty");
  for (double t : grid) {
    if (!(t >= 0.0)) throw InvalidParams("time grid values must be >= 0");
    if (t > kMaxHorizon) throw InvalidParams("time grid beyond the 2^40 horizon");
  }
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw InvalidParams("time grid must be strictly increasing");
}

// Advance to time t; when `visited` is given, record every vertex the
// walker lands on along the way.
inline void advance_tracking(SimState& s, double t,
                             std::unordered_set<Vertex, VertexHash>* visited) {
  while (next_event_time(s) <= t) {
    const EventRecord rec = step(s);
    if (visited && rec.moved) visited->insert(s.walker);
  }
  s.time = t;
}

}  // namespace detail

struct CurveEstimate {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> ci_half;  // 1.96 * sd / sqrt(replicas)
  int64_t replicas = 0;
  std::vector<std::string> warnings;
};

// Mean squared graph distance from the starting vertex at each grid time.
inline CurveEstimate estimate_msd(const SimParams& base, const InitialCondition& ic,
                                  const std::vector<double>& grid, int64_t replicas,
                                  const ReplicaPlan& plan) {
  base.validate();
  detail::validate_grid(grid);
  const size_t n_grid = grid.size();
  std::vector<std::vector<double>> sq(n_grid, std::vector<double>(static_cast<size_t>(replicas)));
  detail::parallel_replicas(replicas, plan.workers, [&](int64_t r) {
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(r));
    SimState s = init(params, ic);
    const Vertex start = s.walker;
    for (size_t gi = 0; gi < n_grid; ++gi) {
      run_until(s, grid[gi]);
      const double d = static_cast<double>(graph_distance(base.g, start, s.walker));
      sq[gi][static_cast<size_t>(r)] = d * d;
    }
  });
  CurveEstimate out;
  out.grid = grid;
  out.replicas = replicas;
  for (size_t gi = 0; gi < n_grid; ++gi) {
    const MeanCi mc = mean_ci(sq[gi]);
    out.mean.push_back(mc.mean);
    out.ci_half.push_back(mc.ci_half);
  }
  return out;
}

inline constexpr double kNoCrossing = -1.0;

struct TvProfile {
  std::vector<double> grid;
  std::vector<double> tv_raw;        // empirical TV to uniform, uncorrected
  std::vector<double> tv_corrected;  // raw minus the finite-sample baseline
  std::vector<double> ci_half;
  double baseline = 0.0;  // mean empirical TV of uniform same-size samples
  double crossing_time = kNoCrossing;  // first grid time with corrected TV <= epsilon
  double epsilon = 0.0;
  int64_t replicas = 0;
  std::vector<std::string> warnings;
};

inline constexpr int kTvBaselineSamples = 16;

// Walker-marginal TV to uniform along a time grid, with the sampling bias
// estimated on true uniform samples of the same size and subtracted. The
// confidence band is a frozen-sign delta-method approximation of the
// multinomial fluctuation of the raw TV.
inline TvProfile estimate_tv_profile(const SimParams& base, const InitialCondition& ic,
                                     const std::vector<double>& grid, int64_t replicas,
                                     double epsilon, const ReplicaPlan& plan) {
  base.validate();
  detail::validate_grid(grid);
  if (!base.g.torus()) throw InvalidParams("estimate_tv_profile needs a torus");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParams("epsilon must lie in (0, 1)");
  const int64_t n_states = base.g.vertex_count();
  const size_t n_grid = grid.size();

  std::vector<std::vector<int32_t>> where(static_cast<size_t>(replicas),
                                          std::vector<int32_t>(n_grid));
  detail::parallel_replicas(replicas, plan.workers, [&](int64_t r) {
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(r));
    SimState s = init(params, ic);
    for (size_t gi = 0; gi < n_grid; ++gi) {
      run_until(s, grid[gi]);
      where[static_cast<size_t>(r)][gi] = static_cast<int32_t>(vertex_index(base.g, s.walker));
    }
  });

  TvProfile out;
  out.grid = grid;
  out.replicas = replicas;
  out.epsilon = epsilon;
  if (replicas < 20 * n_states)
    out.warnings.push_back("replicas below 20 * n^d: TV estimates are noisy at this size");

  double baseline = 0.0;
  for (int b = 0; b < kTvBaselineSamples; ++b) {
    RngStream rng(plan.aux_seed(static_cast<uint64_t>(b)));
    std::vector<int64_t> counts(static_cast<size_t>(n_states), 0);
    for (int64_t r = 0; r < replicas; ++r)
      ++counts[rng.uniform_int(static_cast<uint64_t>(n_states))];
    baseline += tv_to_uniform(counts, replicas);
  }
  out.baseline = baseline / kTvBaselineSamples;

  const double u = 1.0 / static_cast<double>(n_states);
  for (size_t gi = 0; gi < n_grid; ++gi) {
    std::vector<int64_t> counts(static_cast<size_t>(n_states), 0);
    for (int64_t r = 0; r < replicas; ++r)
      ++counts[static_cast<size_t>(where[static_cast<size_t>(r)][gi])];
    const double tv = tv_to_uniform(counts, replicas);
    out.tv_raw.push_back(tv);
    out.tv_corrected.push_back(tv - out.baseline);
    double lin = 0.0, sq = 0.0;
    for (int64_t c : counts) {
      const double p_hat = static_cast<double>(c) / static_cast<double>(replicas);
      const double sign = p_hat >= u ? 1.0 : -1.0;
      lin += sign * p_hat;
      sq += p_hat;  // sign^2 = 1
    }
    const double var = std::max(0.0, (sq - lin * lin) / (4.0 * static_cast<double>(replicas)));
    out.ci_half.push_back(kZ95 * std::sqrt(var));
    if (out.crossing_time == kNoCrossing && out.tv_corrected.back() <= epsilon)
      out.crossing_time = grid[gi];
  }
  if (out.crossing_time == kNoCrossing)
    out.warnings.push_back("GridTooCoarse: corrected TV never reached epsilon on this grid");
  return out;
}

struct HittingEstimate {
  Vertex target{};
  double horizon = 0.0;
  double mean = 0.0;
  double ci_half = 0.0;
  double truncated_fraction = 0.0;  // replicas that ran into the horizon, counted at horizon
  int64_t replicas = 0;
};

inline double default_hitting_horizon(const SimParams& p) {
  return 50.0 * static_cast<double>(p.g.vertex_count()) / p.mu;
}

// Mean time for the walker to first sit on `target`. Replicas that have not
// hit by the horizon contribute the horizon value.
inline HittingEstimate estimate_hitting(const SimParams& base, const InitialCondition& ic,
                                        const Vertex& target, double horizon, int64_t replicas,
                                        const ReplicaPlan& plan) {
  base.validate();
  if (!base.g.torus()) throw InvalidParams("estimate_hitting needs a torus");
  if (!(horizon > 0.0)) throw InvalidParams("horizon must be positive");
  if (horizon > kMaxHorizon) throw InvalidParams("horizon beyond the 2^40 cap");
  const Vertex goal = wrap(base.g, target);

  std::vector<double> values(static_cast<size_t>(replicas));
  std::vector<uint8_t> truncated(static_cast<size_t>(replicas), 0);
  detail::parallel_replicas(replicas, plan.workers, [&](int64_t r) {
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(r));
    SimState s = init(params, ic);
    double value = horizon;
    bool hit = s.walker == goal;
    if (hit) value = 0.0;
    while (!hit && next_event_time(s) <= horizon) {
      const EventRecord rec = step(s);
      if (rec.moved && s.walker == goal) {
        value = rec.time;
        hit = true;
      }
    }
    values[static_cast<size_t>(r)] = value;
    truncated[static_cast<size_t>(r)] = hit ? 0 : 1;
  });

  HittingEstimate out;
  out.target = goal;
  out.horizon = horizon;
  out.replicas = replicas;
  const MeanCi mc = mean_ci(values);
  out.mean = mc.mean;
  out.ci_half = mc.ci_half;
  int64_t n_trunc = 0;
  for (uint8_t t : truncated) n_trunc += t;
  out.truncated_fraction = static_cast<double>(n_trunc) / static_cast<double>(replicas);
  return out;
}

struct ExcursionRecord {
  int64_t gap_blocks = 0;  // observation blocks between consecutive regenerations
  double gap_time = 0.0;
  std::array<int64_t, kMaxDim> du{};  // walker increment in the Z^d lift
};

struct ExcursionSample {
  std::vector<ExcursionRecord> records;
  std::vector<int64_t> ranges;  // distinct vertices visited per excursion
  double block_time = 0.0;
  int64_t chunks = 0;
};

// Records are collected in fixed-size chunks, each on its own derived
// stream with its own warm-up to a first regeneration; chunk order is the
// merge order, so the worker count cannot reorder output. Excursion law is
// unchanged: excursions are independent across regenerations.
inline constexpr int64_t kExcursionChunk = 512;

namespace detail {

template <class RegenFn>
ExcursionSample collect_regenerations(const SimParams& base, const InitialCondition& ic,
                                      double block_time, int64_t count, int64_t max_blocks,
                                      const ReplicaPlan& plan, RegenFn&& regenerative) {
  base.validate();
  if (count <= 0) throw InvalidParams("count must be positive");
  if (max_blocks <= 0) max_blocks = std::max<int64_t>(1000000, 200 * count);
  const int64_t chunks = (count + kExcursionChunk - 1) / kExcursionChunk;
  std::vector<ExcursionSample> partial(static_cast<size_t>(chunks));

  parallel_replicas(chunks, plan.workers, [&](int64_t chunk) {
    const int64_t want =
        std::min<int64_t>(kExcursionChunk, count - chunk * kExcursionChunk);
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(chunk));
    SimState s = init(params, ic);
    ExcursionSample& mine = partial[static_cast<size_t>(chunk)];
    std::unordered_set<Vertex, VertexHash> visited;
    bool in_excursion = false;
    int64_t last_regen_block = 0;
    std::array<int64_t, kMaxDim> last_lifted{};
    for (int64_t k = 0;; ++k) {
      if (k > max_blocks)
        throw Timeout(in_excursion ? "regeneration sampling ran out of block budget"
                                   : "no regeneration within the block budget");
      advance_tracking(s, static_cast<double>(k) * block_time,
                       in_excursion ? &visited : nullptr);
      if (!regenerative(s)) continue;
      if (in_excursion) {
        ExcursionRecord rec;
        rec.gap_blocks = k - last_regen_block;
        rec.gap_time = static_cast<double>(rec.gap_blocks) * block_time;
        for (int i = 0; i < kMaxDim; ++i) rec.du[static_cast<size_t>(i)] =
            s.lifted[static_cast<size_t>(i)] - last_lifted[static_cast<size_t>(i)];
        mine.records.push_back(rec);
        mine.ranges.push_back(static_cast<int64_t>(visited.size()));
        if (static_cast<int64_t>(mine.records.size()) >= want) break;
      }
      in_excursion = true;
      last_regen_block = k;
      last_lifted = s.lifted;
      visited.clear();
      visited.insert(s.walker);
    }
  });

  ExcursionSample out;
  out.block_time = block_time;
  out.chunks = chunks;
  for (auto& part : partial) {
    out.records.insert(out.records.end(), part.records.begin(), part.records.end());
    out.ranges.insert(out.ranges.end(), part.ranges.begin(), part.ranges.end());
  }
  return out;
}

}  // namespace detail

// Excursions between visits to the pinned state (all incident edges
// revealed closed, nothing else revealed), observed at multiples of
// c_obs / mu.
inline ExcursionSample collect_excursions(const SimParams& base, const InitialCondition& ic,
                                          double c_obs, int64_t count, int64_t max_blocks,
                                          const ReplicaPlan& plan) {
  if (!(c_obs > 0.0)) throw InvalidParams("c_obs must be positive");
  return detail::collect_regenerations(base, ic, c_obs / base.mu, count, max_blocks, plan,
                                       [](SimState& s) { return is_regenerative(s); });
}

// Regenerations at integer times on the infinite lattice: the revealed set
// is empty, so the walker sits in a completely fresh environment.
inline ExcursionSample collect_unit_regenerations(const SimParams& base,
                                                  const InitialCondition& ic, int64_t count,
                                                  int64_t max_blocks, const ReplicaPlan& plan) {
  return detail::collect_regenerations(base, ic, 1.0, count, max_blocks, plan,
                                       [](SimState& s) { return s.revealed.empty(); });
}

struct Sigma2Estimate {
  double sigma2 = 0.0;    // Var(first-coordinate increment) / E(gap time)
  double var_u1 = 0.0;
  double mean_gap = 0.0;  // in model time
  double ci_half = 0.0;   // bootstrap band for sigma2
  int64_t count = 0;
};

inline constexpr int kSigma2BootstrapResamples = 64;

inline Sigma2Estimate sigma2_regeneration(const ExcursionSample& sample,
                                          uint64_t bootstrap_seed = 0x51617) {
  const auto& recs = sample.records;
  if (recs.size() < 2) throw InsufficientData("sigma2_regeneration: need at least 2 records");
  std::vector<double> u1(recs.size()), gap(recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    u1[i] = static_cast<double>(recs[i].du[0]);
    gap[i] = recs[i].gap_time;
  }
  Sigma2Estimate out;
  out.count = static_cast<int64_t>(recs.size());
  out.var_u1 = sample_variance(u1);
  out.mean_gap = mean_ci(gap).mean;
  out.sigma2 = out.var_u1 / out.mean_gap;

  RngStream rng(bootstrap_seed);
  std::vector<double> boot;
  std::vector<double> bu(recs.size()), bg(recs.size());
  for (int b = 0; b < kSigma2BootstrapResamples; ++b) {
    for (size_t i = 0; i < recs.size(); ++i) {
      const size_t j = static_cast<size_t>(rng.uniform_int(recs.size()));
      bu[i] = u1[j];
      bg[i] = gap[j];
    }
    boot.push_back(sample_variance(bu) / mean_ci(bg).mean);
  }
  out.ci_half = kZ95 * std::sqrt(sample_variance(boot));
  return out;
}

// Fraction of replicas that have revisited their start strictly after the
// first successful move, by each grid time. Binomial confidence band.
inline CurveEstimate estimate_return_profile(const SimParams& base, const InitialCondition& ic,
                                             const std::vector<double>& grid, int64_t replicas,
                                             const ReplicaPlan& plan) {
  base.validate();
  detail::validate_grid(grid);
  const size_t n_grid = grid.size();
  std::vector<double> return_time(static_cast<size_t>(replicas));
  detail::parallel_replicas(replicas, plan.workers, [&](int64_t r) {
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(r));
    SimState s = init(params, ic);
    const Vertex start = s.walker;
    const double t_max = grid.back();
    double when = -1.0;
    while (next_event_time(s) <= t_max) {
      const EventRecord rec = step(s);
      if (rec.moved && s.moves > 1 && s.walker == start) {
        when = rec.time;
        break;
      }
    }
    return_time[static_cast<size_t>(r)] = when;
  });
  CurveEstimate out;
  out.grid = grid;
  out.replicas = replicas;
  for (size_t gi = 0; gi < n_grid; ++gi) {
    int64_t hit = 0;
    for (double w : return_time) hit += (w >= 0.0 && w <= grid[gi]);
    const double f = static_cast<double>(hit) / static_cast<double>(replicas);
    out.mean.push_back(f);
    out.ci_half.push_back(kZ95 * std::sqrt(f * (1.0 - f) / static_cast<double>(replicas)));
  }
  return out;
}

struct FreezeEstimate {
  double probability = 0.0;
  double ci_half = 0.0;
  double horizon = 0.0;
  int64_t kappa = 0;
  int64_t replicas = 0;
};

// P(walker has net displacement <= kappa at time c/mu).
inline FreezeEstimate freeze_probability(const SimParams& base, const InitialCondition& ic,
                                         int64_t kappa, double c, int64_t replicas,
                                         const ReplicaPlan& plan) {
  base.validate();
  if (kappa < 0) throw InvalidParams("kappa must be >= 0");
  if (!(c > 0.0)) throw InvalidParams("c must be positive");
  const double horizon = c / base.mu;
  if (horizon > kMaxHorizon) throw InvalidParams("freeze horizon beyond the 2^40 cap");
  std::vector<uint8_t> frozen(static_cast<size_t>(replicas));
  detail::parallel_replicas(replicas, plan.workers, [&](int64_t r) {
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(r));
    SimState s = init(params, ic);
    const Vertex start = s.walker;
    run_until(s, horizon);
    frozen[static_cast<size_t>(r)] = graph_distance(base.g, start, s.walker) <= kappa ? 1 : 0;
  });
  FreezeEstimate out;
  out.kappa = kappa;
  out.horizon = horizon;
  out.replicas = replicas;
  int64_t n = 0;
  for (uint8_t f : frozen) n += f;
  out.probability = static_cast<double>(n) / static_cast<double>(replicas);
  out.ci_half =
      kZ95 * std::sqrt(out.probability * (1.0 - out.probability) / static_cast<double>(replicas));
  return out;
}

// Mean revealed-set size at block boundaries k * (block_constant / mu).
inline CurveEstimate revealed_trace(const SimParams& base, const InitialCondition& ic,
                                    double block_constant, int64_t n_blocks, int64_t replicas,
                                    const ReplicaPlan& plan) {
  base.validate();
  if (!(block_constant > 0.0)) throw InvalidParams("block_constant must be positive");
  if (n_blocks < 0) throw InvalidParams("n_blocks must be >= 0");
  const double block = block_constant / base.mu;
  if (static_cast<double>(n_blocks) * block > kMaxHorizon)
    throw InvalidParams("trace horizon beyond the 2^40 cap");
  const size_t n_grid = static_cast<size_t>(n_blocks) + 1;
  std::vector<std::vector<double>> sizes(n_grid, std::vector<double>(static_cast<size_t>(replicas)));
  detail::parallel_replicas(replicas, plan.workers, [&](int64_t r) {
    SimParams params = base;
    params.seed = plan.seed_for(static_cast<uint64_t>(r));
    SimState s = init(params, ic);
    for (size_t k = 0; k < n_grid; ++k) {
      run_until(s, static_cast<double>(k) * block);
      sizes[k][static_cast<size_t>(r)] = static_cast<double>(s.revealed.size());
    }
  });
  CurveEstimate out;
  out.replicas = replicas;
  for (size_t k = 0; k < n_grid; ++k) {
    out.grid.push_back(static_cast<double>(k) * block);
    const MeanCi mc = mean_ci(sizes[k]);
    out.mean.push_back(mc.mean);
    out.ci_half.push_back(mc.ci_half);
  }
  return out;
}

// Probability that a stationary edge is open at some point in a window of
// beta/mu time units: p + (1-p)(1 - exp(-p*beta)).
inline double open_window_probability(double p, double beta) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParams("p must lie strictly in (0, 1)");
  if (!(beta >= 0.0)) throw InvalidParams("beta must be >= 0");
  return 1.0 - (1.0 - p) * std::exp(-p * beta);
}

}  // namespace dynperc

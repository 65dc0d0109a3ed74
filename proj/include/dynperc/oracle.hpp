#pragma once

// Exact solver for the joint walker-plus-environment chain on tiny tori.
// States are (vertex, edge bitmask) pairs, indexed vertex-major with the
// mask in the low bits; edge j of the mask is the edge with edge_index j.
//
// Off-diagonal rates: a closed edge opens at rate p*mu, an open edge closes
// at rate (1-p)*mu (the net effect of rate-mu refreshes), and the walker
// crosses each open incident edge at rate 1/(2d).
//
// Residual checks stream transitions without materializing a matrix, so the
// 24-edge budget (millions of states) stays within memory; time evolution
// and the spectral gap materialize and are capped much smaller.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/lattice.hpp"
#include "dynperc/stats.hpp"

namespace dynperc {

inline constexpr int kOracleMaxEdges = 24;
inline constexpr int64_t kOracleMaxMaterializedStates = 1 << 17;
inline constexpr int64_t kOracleMaxDenseStates = 4096;
inline constexpr double kUniformizationTail = 1e-13;

struct FullChainGenerator {
  Geometry g;
  double p = 0.5;
  double mu = 1.0;
  int64_t n_vertices = 0;
  int n_edges = 0;
  int64_t n_states = 0;

  // per-vertex tables, direction-indexed
  std::vector<std::array<int64_t, 2 * kMaxDim>> neighbor_index;
  std::vector<std::array<int, 2 * kMaxDim>> incident_edge;
  std::vector<double> mask_weight;  // p^k (1-p)^(E-k) by popcount k

  int64_t state_of(int64_t vertex_idx, uint64_t mask) const {
    return (vertex_idx << n_edges) + static_cast<int64_t>(mask);
  }
  int64_t vertex_of(int64_t state) const { return state >> n_edges; }
  uint64_t mask_of(int64_t state) const {
    return static_cast<uint64_t>(state) & ((uint64_t{1} << n_edges) - 1);
  }

  // pi(v, mask) = (1/V) p^|mask| (1-p)^(E-|mask|)
  double stationary_prob(int64_t state) const {
    return mask_weight[static_cast<size_t>(__builtin_popcountll(mask_of(state)))] /
           static_cast<double>(n_vertices);
  }

  template <class Fn>
  void for_each_transition(int64_t state, Fn&& fn) const {
    const int64_t v = vertex_of(state);
    const uint64_t mask = mask_of(state);
    for (int j = 0; j < n_edges; ++j) {
      const uint64_t bit = uint64_t{1} << j;
      const double rate = (mask & bit) ? (1.0 - p) * mu : p * mu;
      fn(state_of(v, mask ^ bit), rate);
    }
    const double cross = 1.0 / static_cast<double>(2 * g.d);
    for (int k = 0; k < 2 * g.d; ++k) {
      if (mask & (uint64_t{1} << incident_edge[static_cast<size_t>(v)][static_cast<size_t>(k)]))
        fn(state_of(neighbor_index[static_cast<size_t>(v)][static_cast<size_t>(k)], mask), cross);
    }
  }

  double exit_rate(int64_t state) const {
    double total = 0.0;
    for_each_transition(state, [&](int64_t, double rate) { total += rate; });
    return total;
  }

  // uniformization constant: an upper bound on every exit rate
  double rate_bound() const {
    return static_cast<double>(n_edges) * mu * std::max(p, 1.0 - p) + 1.0;
  }
};

inline FullChainGenerator build_generator(const Geometry& g, double p, double mu) {
  g.validate();
  if (!g.torus()) throw InvalidParams("build_generator needs a torus");
  if (!(p > 0.0 && p < 1.0)) throw InvalidParams("p must lie strictly in (0, 1)");
  if (!(mu > 0.0)) throw InvalidParams("mu must be positive");
  if (g.edge_count() > kOracleMaxEdges) throw TooLarge("build_generator: more than 24 edges");

  FullChainGenerator gen;
  gen.g = g;
  gen.p = p;
  gen.mu = mu;
  gen.n_vertices = g.vertex_count();
  gen.n_edges = static_cast<int>(g.edge_count());
  gen.n_states = gen.n_vertices << gen.n_edges;
  gen.neighbor_index.resize(static_cast<size_t>(gen.n_vertices));
  gen.incident_edge.resize(static_cast<size_t>(gen.n_vertices));
  for (int64_t vi = 0; vi < gen.n_vertices; ++vi) {
    const Vertex v = vertex_at(g, vi);
    for (int k = 0; k < 2 * g.d; ++k) {
      gen.neighbor_index[static_cast<size_t>(vi)][static_cast<size_t>(k)] =
          vertex_index(g, neighbor(g, v, k));
      gen.incident_edge[static_cast<size_t>(vi)][static_cast<size_t>(k)] =
          static_cast<int>(edge_index(g, edge_in_direction(g, v, k)));
    }
  }
  gen.mask_weight.resize(static_cast<size_t>(gen.n_edges) + 1);
  for (int k = 0; k <= gen.n_edges; ++k)
    gen.mask_weight[static_cast<size_t>(k)] =
        std::pow(p, k) * std::pow(1.0 - p, gen.n_edges - k);
  return gen;
}

// max_j |(pi Q)_j|, streaming
inline double stationary_residual(const FullChainGenerator& gen) {
  std::vector<double> res(static_cast<size_t>(gen.n_states), 0.0);
  for (int64_t i = 0; i < gen.n_states; ++i) {
    const double pi = gen.stationary_prob(i);
    double exit = 0.0;
    gen.for_each_transition(i, [&](int64_t j, double rate) {
      res[static_cast<size_t>(j)] += pi * rate;
      exit += rate;
    });
    res[static_cast<size_t>(i)] -= pi * exit;
  }
  double worst = 0.0;
  for (double r : res) worst = std::max(worst, std::abs(r));
  return worst;
}

// max over transitions of |pi_i Q_ij - pi_j Q_ji|, streaming. Reverse rates
// follow from the transition structure: an edge flip reverses to the
// opposite flip, a walker move reverses across the same open edge.
inline double detailed_balance_residual(const FullChainGenerator& gen) {
  double worst = 0.0;
  const double cross = 1.0 / static_cast<double>(2 * gen.g.d);
  for (int64_t i = 0; i < gen.n_states; ++i) {
    const double pi = gen.stationary_prob(i);
    const int64_t v = gen.vertex_of(i);
    const uint64_t mask = gen.mask_of(i);
    for (int j = 0; j < gen.n_edges; ++j) {
      const uint64_t bit = uint64_t{1} << j;
      const double fwd = (mask & bit) ? (1.0 - gen.p) * gen.mu : gen.p * gen.mu;
      const double rev = (mask & bit) ? gen.p * gen.mu : (1.0 - gen.p) * gen.mu;
      const double pj = gen.stationary_prob(gen.state_of(v, mask ^ bit));
      worst = std::max(worst, std::abs(pi * fwd - pj * rev));
    }
    for (int k = 0; k < 2 * gen.g.d; ++k) {
      if (!(mask & (uint64_t{1}
                    << gen.incident_edge[static_cast<size_t>(v)][static_cast<size_t>(k)])))
        continue;
      const double pj = gen.stationary_prob(gen.state_of(
          gen.neighbor_index[static_cast<size_t>(v)][static_cast<size_t>(k)], mask));
      worst = std::max(worst, std::abs(pi - pj) * cross);
    }
  }
  return worst;
}

// max_i |sum_j Q_ij| with the diagonal included; zero by construction, so
// this only measures accumulation error
inline double row_sum_residual(const FullChainGenerator& gen) {
  double worst = 0.0;
  for (int64_t i = 0; i < gen.n_states; ++i) {
    double row = -gen.exit_rate(i);
    gen.for_each_transition(i, [&](int64_t, double rate) { row += rate; });
    worst = std::max(worst, std::abs(row));
  }
  return worst;
}

// delta_v x product-Bernoulli(p) environment
inline std::vector<double> delta_env_init(const FullChainGenerator& gen, const Vertex& v) {
  std::vector<double> init(static_cast<size_t>(gen.n_states), 0.0);
  const int64_t vi = vertex_index(gen.g, wrap(gen.g, v));
  const int64_t masks = int64_t{1} << gen.n_edges;
  for (int64_t m = 0; m < masks; ++m) {
    const int64_t s = gen.state_of(vi, static_cast<uint64_t>(m));
    init[static_cast<size_t>(s)] = gen.stationary_prob(s) * static_cast<double>(gen.n_vertices);
  }
  return init;
}

inline std::vector<double> stationary_dist(const FullChainGenerator& gen) {
  std::vector<double> pi(static_cast<size_t>(gen.n_states));
  for (int64_t i = 0; i < gen.n_states; ++i)
    pi[static_cast<size_t>(i)] = gen.stationary_prob(i);
  return pi;
}

// uniformized transition matrix P = I + Q/Lambda in CSR
struct UniformizedChain {
  double lambda = 0.0;
  int64_t n_states = 0;
  std::vector<int64_t> row_ptr;
  std::vector<int32_t> col;
  std::vector<double> val;
};

inline UniformizedChain build_uniformized(const FullChainGenerator& gen) {
  if (gen.n_states > kOracleMaxMaterializedStates)
    throw TooLarge("build_uniformized: state space beyond materialization cap");
  UniformizedChain u;
  u.lambda = gen.rate_bound();
  u.n_states = gen.n_states;
  u.row_ptr.assign(static_cast<size_t>(gen.n_states) + 1, 0);
  for (int64_t i = 0; i < gen.n_states; ++i) {
    int64_t nnz = 1;
    gen.for_each_transition(i, [&](int64_t, double) { ++nnz; });
    u.row_ptr[static_cast<size_t>(i) + 1] = u.row_ptr[static_cast<size_t>(i)] + nnz;
  }
  u.col.resize(static_cast<size_t>(u.row_ptr.back()));
  u.val.resize(static_cast<size_t>(u.row_ptr.back()));
  for (int64_t i = 0; i < gen.n_states; ++i) {
    int64_t at = u.row_ptr[static_cast<size_t>(i)];
    double exit = 0.0;
    gen.for_each_transition(i, [&](int64_t j, double rate) {
      u.col[static_cast<size_t>(at)] = static_cast<int32_t>(j);
      u.val[static_cast<size_t>(at)] = rate / u.lambda;
      ++at;
      exit += rate;
    });
    u.col[static_cast<size_t>(at)] = static_cast<int32_t>(i);
    u.val[static_cast<size_t>(at)] = 1.0 - exit / u.lambda;
  }
  return u;
}

// dist * P (row vector times matrix)
inline std::vector<double> apply_uniformized(const UniformizedChain& u,
                                             const std::vector<double>& dist) {
  std::vector<double> out(dist.size(), 0.0);
  for (int64_t i = 0; i < u.n_states; ++i) {
    const double vi = dist[static_cast<size_t>(i)];
    if (vi == 0.0) continue;
    for (int64_t k = u.row_ptr[static_cast<size_t>(i)]; k < u.row_ptr[static_cast<size_t>(i) + 1];
         ++k)
      out[static_cast<size_t>(u.col[static_cast<size_t>(k)])] += vi * u.val[static_cast<size_t>(k)];
  }
  return out;
}

// init * exp(tQ) by uniformization, Poisson tail truncated below `tail`
// (default well under the 1e-12 contract).
inline std::vector<double> marginal_at(const UniformizedChain& u, std::vector<double> dist,
                                       double t, double tail = kUniformizationTail) {
  if (t < 0.0) throw InvalidParams("marginal_at: negative time");
  const double m = u.lambda * t;
  if (m == 0.0) return dist;
  std::vector<double> out(dist.size(), 0.0);
  const double log_m = std::log(m);
  double cumulative = 0.0;
  const int64_t k_cap =
      static_cast<int64_t>(m + 12.0 * std::sqrt(m + 30.0) + 80.0);
  for (int64_t k = 0; k <= k_cap; ++k) {
    const double w =
        std::exp(-m + static_cast<double>(k) * log_m - std::lgamma(static_cast<double>(k) + 1.0));
    if (w > 0.0) {
      for (size_t i = 0; i < dist.size(); ++i) out[i] += w * dist[i];
      cumulative += w;
    }
    if (cumulative >= 1.0 - tail) break;
    dist = apply_uniformized(u, dist);
  }
  return out;
}

inline std::vector<double> marginal_at(const FullChainGenerator& gen, std::vector<double> dist,
                                       double t, double tail = kUniformizationTail) {
  return marginal_at(build_uniformized(gen), std::move(dist), t, tail);
}

// distribution over walker vertices
inline std::vector<double> walker_marginal(const FullChainGenerator& gen,
                                           const std::vector<double>& dist) {
  std::vector<double> out(static_cast<size_t>(gen.n_vertices), 0.0);
  for (int64_t s = 0; s < gen.n_states; ++s)
    out[static_cast<size_t>(gen.vertex_of(s))] += dist[static_cast<size_t>(s)];
  return out;
}

// First time the worst TV to stationarity over the given initial
// distributions drops to epsilon, by doubling then bisection. TV from
// stationarity is non-increasing in t, which makes the bracket valid.
inline double exact_tv_mix(const FullChainGenerator& gen, double epsilon,
                           const std::vector<std::vector<double>>& inits,
                           double rel_tol = 1e-4) {
  if (inits.empty()) throw InvalidParams("exact_tv_mix: no initial distributions");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParams("exact_tv_mix: epsilon in (0, 1)");
  const UniformizedChain u = build_uniformized(gen);
  const std::vector<double> pi = stationary_dist(gen);
  auto worst_tv = [&](double t) {
    double worst = 0.0;
    for (const auto& init : inits)
      worst = std::max(worst, tv_distance(marginal_at(u, init, t), pi));
    return worst;
  };
  double hi = 1.0 / gen.mu;
  int doublings = 0;
  while (worst_tv(hi) > epsilon) {
    hi *= 2.0;
    if (++doublings > 60) throw Timeout("exact_tv_mix: no crossing below 2^60 / mu");
  }
  double lo = 0.0;
  while (hi - lo > rel_tol * hi + 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (worst_tv(mid) <= epsilon ? hi : lo) = mid;
  }
  return hi;
}

// Smallest nonzero eigenvalue of -Q via the reversible symmetrization
// S = D^{1/2} Q D^{-1/2}, D = diag(pi). Dense solve, hard state cap.
inline double spectral_gap(const FullChainGenerator& gen) {
  if (gen.n_states > kOracleMaxDenseStates)
    throw TooLarge("spectral_gap: state space beyond dense cap");
  const int n = static_cast<int>(gen.n_states);
  std::vector<double> sqrt_pi(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) sqrt_pi[static_cast<size_t>(i)] = std::sqrt(gen.stationary_prob(i));
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    gen.for_each_transition(i, [&](int64_t j, double rate) {
      s(i, static_cast<int>(j)) +=
          rate * sqrt_pi[static_cast<size_t>(i)] / sqrt_pi[static_cast<size_t>(j)];
    });
    s(i, i) = -gen.exit_rate(i);
  }
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("spectral_gap: eigensolver failed");
  // eigenvalues ascending; the last is 0 (stationarity), the one before is -gap
  return -solver.eigenvalues()(n - 2);
}

}  // namespace dynperc

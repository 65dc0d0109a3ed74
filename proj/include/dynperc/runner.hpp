#pragma once

// Experiment runner: turns a validated config into CSV rows, a JSON summary,
// and a JSON run manifest, with the on-disk layout the CLI exposes.
//
// Output contract: CSV is RFC 4180 (fields quoted only when needed),
// numbers are shortest-round-trip, and everything written is a pure
// function of (config, master seed); worker count and wall time never
// reach the CSV or summary. The manifest additionally stores wall time and
// a replica-0 spot-check vector, which `verify_run` recomputes from scratch
// after re-deriving the replica-0 stream from the config echo.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynperc/config.hpp"
#include "dynperc/coupling.hpp"
#include "dynperc/errors.hpp"
#include "dynperc/estimators.hpp"
#include "dynperc/oracle.hpp"
#include "dynperc/percolation.hpp"
#include "dynperc/simulator.hpp"
#include "dynperc/stats.hpp"
#include "dynperc/version.hpp"

namespace dynperc {

inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_int(int64_t v) { return std::to_string(v); }

inline std::string fmt_vertex(const Geometry& g, const Vertex& v) {
  std::string out = "(";
  for (int i = 0; i < g.d; ++i) {
    if (i) out += ",";
    out += std::to_string(v.c[static_cast<size_t>(i)]);
  }
  return out + ")";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation anywhere
  if (!out) throw Error("cannot open for writing: " + path.string());
  auto write_row = [&](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_field(row[i]);
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) write_row(row);
}

struct ExperimentOutput {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json summary;
  std::vector<std::string> warnings;
};

namespace detail {

inline SimParams sim_params(const ExperimentConfig& cfg) {
  return SimParams{cfg.g, cfg.p, cfg.mu, 0};
}

inline Vertex hit_target(const ExperimentConfig& cfg) {
  return cfg.target_is_antipode ? antipode(cfg.g, Vertex{}) : cfg.target;
}

inline double hit_horizon(const ExperimentConfig& cfg) {
  return cfg.horizon > 0.0 ? cfg.horizon : default_hitting_horizon(sim_params(cfg));
}

// Sampling kernel shared by the perc experiment and its replica-0 check:
// per replica, one config and the origin cluster's size and diameter.
inline std::pair<int64_t, int64_t> perc_origin_sample(const ExperimentConfig& cfg,
                                                      const ReplicaPlan& plan, int64_t replica) {
  RngStream rng(plan.seed_for(static_cast<uint64_t>(replica)));
  const EdgeConfig config = sample_config(cfg.g, cfg.p, rng);
  const std::vector<Vertex> cluster = cluster_of(config, Vertex{});
  return {static_cast<int64_t>(cluster.size()), lattice_diameter(cfg.g, cluster)};
}

inline ExperimentOutput run_msd(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const CurveEstimate est = estimate_msd(sim_params(cfg), cfg.init, cfg.t_grid, cfg.replicas, plan);
  ExperimentOutput out;
  out.header = {"t", "mean_sq_dist", "ci_half", "replicas"};
  for (size_t i = 0; i < est.grid.size(); ++i)
    out.rows.push_back({fmt_double(est.grid[i]), fmt_double(est.mean[i]),
                        fmt_double(est.ci_half[i]), fmt_int(est.replicas)});
  out.summary = {{"final_t", est.grid.back()},
                 {"final_mean_sq_dist", est.mean.back()},
                 {"replicas", est.replicas}};
  out.warnings = est.warnings;
  return out;
}

inline ExperimentOutput run_mix(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const TvProfile est =
      estimate_tv_profile(sim_params(cfg), cfg.init, cfg.t_grid, cfg.replicas, cfg.epsilon, plan);
  ExperimentOutput out;
  out.header = {"t", "tv_raw", "tv_corrected", "ci_half"};
  for (size_t i = 0; i < est.grid.size(); ++i)
    out.rows.push_back({fmt_double(est.grid[i]), fmt_double(est.tv_raw[i]),
                        fmt_double(est.tv_corrected[i]), fmt_double(est.ci_half[i])});
  out.summary = {{"epsilon", est.epsilon},
                 {"crossing_time", est.crossing_time},
                 {"baseline", est.baseline},
                 {"replicas", est.replicas}};
  out.warnings = est.warnings;
  return out;
}

inline ExperimentOutput run_hit(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const HittingEstimate est = estimate_hitting(sim_params(cfg), cfg.init, hit_target(cfg),
                                               hit_horizon(cfg), cfg.replicas, plan);
  ExperimentOutput out;
  out.header = {"target", "mean", "ci_half", "truncated_fraction"};
  out.rows.push_back({fmt_vertex(cfg.g, est.target), fmt_double(est.mean),
                      fmt_double(est.ci_half), fmt_double(est.truncated_fraction)});
  out.summary = {{"mean", est.mean},
                 {"ci_half", est.ci_half},
                 {"truncated_fraction", est.truncated_fraction},
                 {"horizon", est.horizon},
                 {"replicas", est.replicas}};
  if (est.truncated_fraction > 0.01)
    out.warnings.push_back("more than 1% of replicas hit the horizon");
  return out;
}

inline ExperimentOutput regeneration_rows(const ExperimentConfig& cfg, const ExcursionSample& s) {
  ExperimentOutput out;
  out.header = {"j", "gap"};
  for (int i = 0; i < cfg.g.d; ++i) out.header.push_back("du_" + std::to_string(i + 1));
  for (size_t j = 0; j < s.records.size(); ++j) {
    std::vector<std::string> row{fmt_int(static_cast<int64_t>(j)),
                                 fmt_int(s.records[j].gap_blocks)};
    for (int i = 0; i < cfg.g.d; ++i)
      row.push_back(fmt_int(s.records[j].du[static_cast<size_t>(i)]));
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline ExperimentOutput run_excursions(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const ExcursionSample s = collect_excursions(sim_params(cfg), cfg.init, cfg.c_obs, cfg.count,
                                               cfg.max_blocks, plan);
  ExperimentOutput out = regeneration_rows(cfg, s);
  std::vector<double> gaps;
  for (const auto& rec : s.records) gaps.push_back(static_cast<double>(rec.gap_blocks));
  const MeanCi gap = mean_ci(gaps);
  out.summary = {{"count", s.records.size()},
                 {"block_time", s.block_time},
                 {"mean_gap_blocks", gap.mean},
                 {"gap_ci_half", gap.ci_half},
                 {"gap_lag1_autocorr", lag1_autocorr(gaps)}};
  for (int i = 0; i < cfg.g.d; ++i) {
    std::vector<double> du;
    for (const auto& rec : s.records)
      du.push_back(static_cast<double>(rec.du[static_cast<size_t>(i)]));
    const MeanCi mc = mean_ci(du);
    out.summary["du_mean"].push_back(mc.mean);
    out.summary["du_ci_half"].push_back(mc.ci_half);
  }
  return out;
}

inline ExperimentOutput run_sigma2(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const ExcursionSample s =
      collect_unit_regenerations(sim_params(cfg), cfg.init, cfg.count, cfg.max_blocks, plan);
  const Sigma2Estimate est = sigma2_regeneration(s);
  ExperimentOutput out = regeneration_rows(cfg, s);
  out.summary = {{"sigma2", est.sigma2},
                 {"sigma2_ci_half", est.ci_half},
                 {"var_u1", est.var_u1},
                 {"mean_gap", est.mean_gap},
                 {"count", est.count}};
  return out;
}

inline ExperimentOutput run_oracle(const ExperimentConfig& cfg) {
  const FullChainGenerator gen = build_generator(cfg.g, cfg.p, cfg.mu);
  ExperimentOutput out;
  out.header = {"quantity", "value"};
  auto add = [&](const std::string& name, double value) {
    out.rows.push_back({name, fmt_double(value)});
    out.summary[name] = value;
  };
  add("states", static_cast<double>(gen.n_states));
  add("stationary_residual", stationary_residual(gen));
  add("detailed_balance_residual", detailed_balance_residual(gen));
  add("row_sum_residual", row_sum_residual(gen));
  if (gen.n_states <= kOracleMaxDenseStates) add("spectral_gap", spectral_gap(gen));
  if (gen.n_states <= kOracleMaxMaterializedStates)
    add("mix_time", exact_tv_mix(gen, cfg.epsilon, {delta_env_init(gen, Vertex{})}));
  return out;
}

inline ExperimentOutput run_perc(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  std::vector<int64_t> sizes(static_cast<size_t>(cfg.replicas));
  std::vector<int64_t> diams(static_cast<size_t>(cfg.replicas));
  dynperc::detail::parallel_replicas(cfg.replicas, plan.workers, [&](int64_t r) {
    const auto [size, diam] = perc_origin_sample(cfg, plan, r);
    sizes[static_cast<size_t>(r)] = size;
    diams[static_cast<size_t>(r)] = diam;
  });

  ExperimentOutput out;
  out.header = {"r", "diam_tail", "size_tail"};
  const int64_t r_max = std::max(cfg.diam_fit_max, cfg.size_fit_max);
  const double n = static_cast<double>(cfg.replicas);
  for (int64_t r = 0; r <= r_max; ++r) {
    int64_t sd = 0, ss = 0;
    for (int64_t x : diams) sd += (x >= r);
    for (int64_t x : sizes) ss += (x >= r);
    out.rows.push_back({fmt_int(r), fmt_double(static_cast<double>(sd) / n),
                        fmt_double(static_cast<double>(ss) / n)});
  }
  out.summary = {{"replicas", cfg.replicas}};
  auto fit = [&](const std::string& name, const std::vector<int64_t>& xs, int64_t lo, int64_t hi) {
    try {
      const TailFit f = tail_fit(xs, lo, hi);
      out.summary[name] = {{"rate", f.rate}, {"r_squared", f.r_squared},
                           {"points", f.r_values.size()}};
    } catch (const InsufficientData& e) {
      out.summary[name] = nullptr;
      out.warnings.push_back(name + ": " + e.what());
    }
  };
  fit("diameter_fit", diams, cfg.diam_fit_min, cfg.diam_fit_max);
  fit("size_fit", sizes, cfg.size_fit_min, cfg.size_fit_max);
  if (cfg.theta) {
    RngStream rng(plan.aux_seed(0));
    out.summary["theta"] = estimate_theta(cfg.g, cfg.p, cfg.replicas, rng);
  }
  return out;
}

inline ExperimentOutput run_couple(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  ExperimentOutput out;
  if (cfg.couple_variant == "lsrw") {
    const MeetEstimate est =
        lsrw_coupled_meet(cfg.g, cfg.start_a, cfg.start_b, cfg.pairs, cfg.max_steps, plan);
    out.header = {"pair", "steps"};
    for (size_t j = 0; j < est.steps.size(); ++j)
      out.rows.push_back({fmt_int(static_cast<int64_t>(j)), fmt_double(est.steps[j])});
    out.summary = {{"mean_steps", est.mean_steps},
                   {"ci_half", est.ci_half},
                   {"pairs", est.pairs},
                   {"marginal_pvalue", lsrw_marginal_pvalue(cfg.g, est.tally)}};
    return out;
  }
  const T1Estimate est = simultaneous_regeneration_time(sim_params(cfg), cfg.init, cfg.c_obs,
                                                        cfg.pairs, cfg.max_blocks, plan);
  out.header = {"pair", "t1_blocks"};
  for (size_t j = 0; j < est.t1_blocks.size(); ++j)
    out.rows.push_back({fmt_int(static_cast<int64_t>(j)), fmt_int(est.t1_blocks[j])});
  out.summary = {{"mean_blocks", est.mean_blocks},
                 {"ci_half", est.ci_half},
                 {"block_time", est.block_time},
                 {"pairs_completed", est.pairs_completed},
                 {"pairs_timed_out", est.pairs_timed_out}};
  if (est.pairs_timed_out > 0)
    out.warnings.push_back("some pairs hit the block budget and are excluded from the mean");
  return out;
}

inline ExperimentOutput run_freeze(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const FreezeEstimate est =
      freeze_probability(sim_params(cfg), cfg.init, cfg.kappa, cfg.c, cfg.replicas, plan);
  ExperimentOutput out;
  out.header = {"mu", "kappa", "c", "probability", "ci_half", "replicas"};
  out.rows.push_back({fmt_double(cfg.mu), fmt_int(est.kappa), fmt_double(cfg.c),
                      fmt_double(est.probability), fmt_double(est.ci_half),
                      fmt_int(est.replicas)});
  out.summary = {{"probability", est.probability},
                 {"ci_half", est.ci_half},
                 {"horizon", est.horizon},
                 {"replicas", est.replicas}};
  return out;
}

inline ExperimentOutput run_trace(const ExperimentConfig& cfg, const ReplicaPlan& plan) {
  const CurveEstimate est = revealed_trace(sim_params(cfg), cfg.init, cfg.block_constant,
                                           cfg.n_blocks, cfg.replicas, plan);
  ExperimentOutput out;
  out.header = {"block", "t", "mean_revealed", "ci_half"};
  for (size_t i = 0; i < est.grid.size(); ++i)
    out.rows.push_back({fmt_int(static_cast<int64_t>(i)), fmt_double(est.grid[i]),
                        fmt_double(est.mean[i]), fmt_double(est.ci_half[i])});
  out.summary = {{"final_mean_revealed", est.mean.back()}, {"replicas", est.replicas}};
  out.warnings = est.warnings;
  return out;
}

}  // namespace detail

inline ExperimentOutput run_single(const ExperimentConfig& cfg, uint64_t grid_index) {
  const ReplicaPlan plan = cfg.plan(grid_index);
  switch (cfg.id) {
    case ExperimentId::Msd: return detail::run_msd(cfg, plan);
    case ExperimentId::Mix: return detail::run_mix(cfg, plan);
    case ExperimentId::Hit: return detail::run_hit(cfg, plan);
    case ExperimentId::Excursions: return detail::run_excursions(cfg, plan);
    case ExperimentId::Sigma2: return detail::run_sigma2(cfg, plan);
    case ExperimentId::Oracle: return detail::run_oracle(cfg);
    case ExperimentId::Perc: return detail::run_perc(cfg, plan);
    case ExperimentId::Couple: return detail::run_couple(cfg, plan);
    case ExperimentId::Freeze: return detail::run_freeze(cfg, plan);
    case ExperimentId::Trace: return detail::run_trace(cfg, plan);
  }
  throw Error("unreachable experiment id");
}

// Replica-0 spot check: a short vector of doubles that any later verify can
// recompute exactly from the config echo. Uses the same derived streams as
// the full run, so it equals what replica 0 contributed there.
inline std::vector<double> replica0_check(const ExperimentConfig& cfg, uint64_t grid_index) {
  const ReplicaPlan plan = cfg.plan(grid_index);
  std::vector<double> out;
  switch (cfg.id) {
    case ExperimentId::Msd: {
      const CurveEstimate est =
          estimate_msd(detail::sim_params(cfg), cfg.init, cfg.t_grid, 1, plan);
      return est.mean;
    }
    case ExperimentId::Mix: {
      SimParams params = detail::sim_params(cfg);
      params.seed = plan.seed_for(0);
      SimState s = init(params, cfg.init);
      for (double t : cfg.t_grid) {
        run_until(s, t);
        out.push_back(static_cast<double>(vertex_index(cfg.g, s.walker)));
      }
      return out;
    }
    case ExperimentId::Hit: {
      const HittingEstimate est =
          estimate_hitting(detail::sim_params(cfg), cfg.init, detail::hit_target(cfg),
                           detail::hit_horizon(cfg), 1, plan);
      return {est.mean, est.truncated_fraction};
    }
    case ExperimentId::Excursions: {
      const ExcursionSample s =
          collect_excursions(detail::sim_params(cfg), cfg.init, cfg.c_obs,
                             std::min<int64_t>(cfg.count, 8), cfg.max_blocks, plan);
      for (const auto& rec : s.records) {
        out.push_back(static_cast<double>(rec.gap_blocks));
        for (int i = 0; i < cfg.g.d; ++i)
          out.push_back(static_cast<double>(rec.du[static_cast<size_t>(i)]));
      }
      return out;
    }
    case ExperimentId::Sigma2: {
      const ExcursionSample s =
          collect_unit_regenerations(detail::sim_params(cfg), cfg.init,
                                     std::min<int64_t>(cfg.count, 8), cfg.max_blocks, plan);
      for (const auto& rec : s.records) {
        out.push_back(static_cast<double>(rec.gap_blocks));
        for (int i = 0; i < cfg.g.d; ++i)
          out.push_back(static_cast<double>(rec.du[static_cast<size_t>(i)]));
      }
      return out;
    }
    case ExperimentId::Oracle: {
      const FullChainGenerator gen = build_generator(cfg.g, cfg.p, cfg.mu);
      return {stationary_residual(gen)};
    }
    case ExperimentId::Perc: {
      const auto [size, diam] = detail::perc_origin_sample(cfg, plan, 0);
      return {static_cast<double>(size), static_cast<double>(diam)};
    }
    case ExperimentId::Couple: {
      if (cfg.couple_variant == "lsrw") {
        const MeetEstimate est =
            lsrw_coupled_meet(cfg.g, cfg.start_a, cfg.start_b, 1, cfg.max_steps, plan);
        return {est.steps[0]};
      }
      try {
        const T1Estimate est = simultaneous_regeneration_time(
            detail::sim_params(cfg), cfg.init, cfg.c_obs, 1, cfg.max_blocks, plan);
        return {static_cast<double>(est.t1_blocks[0])};
      } catch (const Timeout&) {
        return {-1.0};
      }
    }
    case ExperimentId::Freeze: {
      const FreezeEstimate est =
          freeze_probability(detail::sim_params(cfg), cfg.init, cfg.kappa, cfg.c, 1, plan);
      return {est.probability};
    }
    case ExperimentId::Trace: {
      const CurveEstimate est = revealed_trace(detail::sim_params(cfg), cfg.init,
                                               cfg.block_constant, cfg.n_blocks, 1, plan);
      return est.mean;
    }
  }
  throw Error("unreachable experiment id");
}

namespace detail {

// Sweep axes in key order (mu, n, p); the last axis varies fastest.
struct SweepGrid {
  std::vector<std::string> axes;
  std::vector<std::vector<double>> values;
  int64_t points = 1;
};

inline SweepGrid sweep_grid(const ExperimentConfig& cfg) {
  SweepGrid grid;
  for (const auto& [axis, vals] : cfg.sweep) {
    grid.axes.push_back(axis);
    grid.values.push_back(vals);
    grid.points *= static_cast<int64_t>(vals.size());
  }
  return grid;
}

inline ExperimentConfig apply_sweep_point(const ExperimentConfig& base, const SweepGrid& grid,
                                          int64_t index, std::vector<double>* applied) {
  ExperimentConfig cfg = base;
  int64_t rest = index;
  for (size_t a = grid.axes.size(); a-- > 0;) {
    const auto& vals = grid.values[a];
    const double v = vals[static_cast<size_t>(rest % static_cast<int64_t>(vals.size()))];
    rest /= static_cast<int64_t>(vals.size());
    if (applied) (*applied)[a] = v;
    if (grid.axes[a] == "p") {
      if (!(v > 0.0 && v < 1.0)) throw ConfigError("sweep.p value outside (0, 1)");
      cfg.p = v;
    } else if (grid.axes[a] == "mu") {
      if (!(v > 0.0)) throw ConfigError("sweep.mu value must be positive");
      cfg.mu = v;
    } else {
      const int64_t n = static_cast<int64_t>(v);
      if (static_cast<double>(n) != v || n < 3) throw ConfigError("sweep.n needs integers >= 3");
      cfg.g.n = n;
    }
  }
  return cfg;
}

}  // namespace detail

struct RunResult {
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
  std::filesystem::path manifest_path;
  nlohmann::json summary;
  std::vector<std::string> warnings;
};

// Run the experiment (sweeping if sweep keys are present) and write
// <experiment or sweep>.csv, summary.json, and manifest.json under out_dir.
// Partial outputs are removed if anything throws.
inline RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  RunResult result;
  std::vector<std::filesystem::path> written;
  try {
    nlohmann::json manifest;
    std::vector<std::string> warnings = cfg.warnings;
    const bool sweeping = !cfg.sweep.empty();

    if (!sweeping) {
      ExperimentOutput out = run_single(cfg, 0);
      result.csv_path = out_dir / (cfg.experiment + ".csv");
      write_csv(result.csv_path, out.header, out.rows);
      written.push_back(result.csv_path);
      result.summary = {{"experiment", cfg.experiment}, {"results", out.summary}};
      warnings.insert(warnings.end(), out.warnings.begin(), out.warnings.end());
      manifest["grid_points"] = 1;
    } else {
      const detail::SweepGrid grid = detail::sweep_grid(cfg);
      std::vector<std::vector<std::string>> rows;
      std::vector<std::string> header{"grid_index"};
      for (const auto& axis : grid.axes) header.push_back(axis);
      nlohmann::json points = nlohmann::json::array();
      for (int64_t gi = 0; gi < grid.points; ++gi) {
        std::vector<double> applied(grid.axes.size());
        const ExperimentConfig point =
            detail::apply_sweep_point(cfg, grid, gi, &applied);
        ExperimentOutput out = run_single(point, static_cast<uint64_t>(gi));
        if (gi == 0)
          header.insert(header.end(), out.header.begin(), out.header.end());
        for (auto& row : out.rows) {
          std::vector<std::string> full{fmt_int(gi)};
          for (double v : applied) full.push_back(fmt_double(v));
          full.insert(full.end(), row.begin(), row.end());
          rows.push_back(std::move(full));
        }
        nlohmann::json point_summary = {{"grid_index", gi}, {"results", out.summary}};
        for (size_t a = 0; a < grid.axes.size(); ++a) point_summary[grid.axes[a]] = applied[a];
        points.push_back(std::move(point_summary));
        for (const auto& w : out.warnings)
          warnings.push_back("grid " + std::to_string(gi) + ": " + w);
      }
      result.csv_path = out_dir / "sweep.csv";
      write_csv(result.csv_path, header, rows);
      written.push_back(result.csv_path);
      result.summary = {{"experiment", cfg.experiment}, {"sweep", points}};
      manifest["grid_points"] = grid.points;
    }

    result.summary["warnings"] = warnings;
    result.warnings = warnings;
    result.summary_path = out_dir / "summary.json";
    {
      std::ofstream out(result.summary_path, std::ios::binary);
      out << result.summary.dump(2) << "\n";
    }
    written.push_back(result.summary_path);

    manifest["library_version"] = kVersion;
    manifest["seed_rule"] = kSeedRuleId;
    manifest["experiment"] = cfg.experiment;
    manifest["config"] = cfg.echo;
    manifest["master_seed"] = std::to_string(cfg.seed);
    manifest["replica0_seed"] = std::to_string(cfg.plan(0).seed_for(0));
    manifest["replica0_check"] = replica0_check(
        cfg.sweep.empty() ? cfg
                          : detail::apply_sweep_point(cfg, detail::sweep_grid(cfg), 0, nullptr),
        0);
    manifest["warnings"] = warnings;
    manifest["outputs"] = {result.csv_path.filename().string(),
                           result.summary_path.filename().string()};
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.manifest_path = out_dir / "manifest.json";
    {
      std::ofstream out(result.manifest_path, std::ios::binary);
      out << manifest.dump(2) << "\n";
    }
    return result;
  } catch (...) {
    for (const auto& path : written) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
    throw;
  }
}

struct VerifyResult {
  bool ok = false;
  std::string message;
};

// Re-derive the replica-0 stream from the manifest's config echo, re-run the
// spot check, and require bit-identical values.
inline VerifyResult verify_run(const std::filesystem::path& out_dir) {
  const auto manifest_path = out_dir / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) return {false, "cannot open " + manifest_path.string()};
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    return {false, std::string("manifest is not valid JSON: ") + e.what()};
  }
  try {
    if (manifest.at("seed_rule").get<std::string>() != kSeedRuleId)
      return {false, "seed rule mismatch: manifest has " +
                         manifest.at("seed_rule").get<std::string>() + ", library has " +
                         kSeedRuleId};
    ConfigMap echo;
    for (const auto& [key, value] : manifest.at("config").items())
      echo[key] = value.get<std::string>();
    ExperimentConfig cfg = parse_config(echo);
    cfg.workers = 1;
    if (std::to_string(cfg.plan(0).seed_for(0)) !=
        manifest.at("replica0_seed").get<std::string>())
      return {false, "replica-0 seed does not re-derive to the stored value"};
    const ExperimentConfig point =
        cfg.sweep.empty() ? cfg
                          : detail::apply_sweep_point(cfg, detail::sweep_grid(cfg), 0, nullptr);
    const std::vector<double> check = replica0_check(point, 0);
    const std::vector<double> stored = manifest.at("replica0_check").get<std::vector<double>>();
    if (check.size() != stored.size())
      return {false, "replica-0 check length mismatch: recomputed " +
                         std::to_string(check.size()) + ", stored " +
                         std::to_string(stored.size())};
    for (size_t i = 0; i < check.size(); ++i)
      if (check[i] != stored[i])
        return {false, "replica-0 check mismatch at index " + std::to_string(i) +
                           ": recomputed " + fmt_double(check[i]) + ", stored " +
                           fmt_double(stored[i])};
    for (const auto& name : manifest.at("outputs"))
      if (!std::filesystem::exists(out_dir / name.get<std::string>()))
        return {false, "missing output file: " + name.get<std::string>()};
  } catch (const std::exception& e) {
    return {false, std::string("verification failed: ") + e.what()};
  }
  return {true, "replica-0 spot check matches; seeds re-derive"};
}

}  // namespace dynperc

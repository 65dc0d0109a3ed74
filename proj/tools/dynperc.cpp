// dynperc: config-driven experiment runner for random walk on dynamical
// percolation.
//
// Subcommands:
//   run      run the experiment described by a config file
//   sweep    same as run (sweep.* keys in the config define the grid)
//   verify   re-derive seeds and re-run the replica-0 spot check of a run dir
//   snapshot dump one trajectory as (time, walker coords, revealed count) rows
//
// Exit codes: 0 ok, 1 config error, 2 runtime error, 3 verification mismatch.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dynperc/config.hpp"
#include "dynperc/runner.hpp"
#include "dynperc/simulator.hpp"
#include "dynperc/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args->out_dir, "output directory (overrides the config's out key)");
  cmd->add_option("--seed", args->seed, "master seed (overrides the config)")
      ->each([args](const std::string&) { args->seed_set = true; });
  cmd->add_option("--workers", args->workers, "worker threads (0 = all cores)");
}

// Overrides are applied to the raw key-value map before parsing, so the
// config echo in the manifest already contains them and a later verify
// re-derives the same seeds.
dynperc::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw dynperc::ConfigError("cannot open config file: " + args.config_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  dynperc::ConfigMap map = dynperc::parse_config_text(buf.str());
  if (args.seed_set) map["seed"] = std::to_string(args.seed);
  if (args.workers >= 0) map["workers"] = std::to_string(args.workers);
  return dynperc::parse_config(map);
}

std::filesystem::path resolve_out_dir(const CommonArgs& args,
                                      const dynperc::ExperimentConfig& cfg) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  return std::filesystem::path("runs") / cfg.experiment;
}

int do_run(const CommonArgs& args) {
  const dynperc::ExperimentConfig cfg = load_with_overrides(args);
  const std::filesystem::path out_dir = resolve_out_dir(args, cfg);
  const dynperc::RunResult result = dynperc::run_experiment(cfg, out_dir);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
  std::cout << "wrote " << result.csv_path.string() << "\n"
            << "wrote " << result.summary_path.string() << "\n"
            << "wrote " << result.manifest_path.string() << "\n";
  return 0;
}

int do_verify(const std::string& dir) {
  const dynperc::VerifyResult result = dynperc::verify_run(dir);
  std::cout << (result.ok ? "ok: " : "MISMATCH: ") << result.message << "\n";
  return result.ok ? 0 : 3;
}

int do_snapshot(const CommonArgs& args, int64_t events, double until) {
  const dynperc::ExperimentConfig cfg = load_with_overrides(args);
  if (std::isnan(cfg.p) || std::isnan(cfg.mu))
    throw dynperc::ConfigError("snapshot needs p and mu");
  dynperc::SimParams params{cfg.g, cfg.p, cfg.mu, cfg.plan(0).seed_for(0)};
  dynperc::SimState s = dynperc::init(params, cfg.init);

  const std::filesystem::path out_dir = resolve_out_dir(args, cfg);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path path = out_dir / "snapshot.csv";
  std::vector<std::string> header{"time"};
  for (int i = 0; i < cfg.g.d; ++i) header.push_back("x_" + std::to_string(i + 1));
  header.push_back("revealed");
  std::vector<std::vector<std::string>> rows;
  auto record = [&]() {
    std::vector<std::string> row{dynperc::fmt_double(s.time)};
    for (int i = 0; i < cfg.g.d; ++i)
      row.push_back(dynperc::fmt_int(s.walker.c[static_cast<size_t>(i)]));
    row.push_back(dynperc::fmt_int(static_cast<int64_t>(s.revealed.size())));
    rows.push_back(std::move(row));
  };
  record();
  for (int64_t k = 0; k < events; ++k) {
    if (until > 0.0 && dynperc::next_event_time(s) > until) break;
    dynperc::step(s);
    record();
  }
  dynperc::write_csv(path, header, rows);
  std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random walk on dynamical percolation: simulator and estimators"};
  app.set_version_flag("--version", std::string("dynperc ") + dynperc::kVersion);
  app.require_subcommand(1);

  CommonArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, &run_args);

  CommonArgs sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep_cmd, &sweep_args);

  std::string verify_dir;
  CLI::App* verify_cmd = app.add_subcommand("verify", "check a run directory's manifest");
  verify_cmd->add_option("dir", verify_dir, "run directory containing manifest.json")
      ->required();

  CommonArgs snap_args;
  int64_t snap_events = 200;
  double snap_until = 0.0;
  CLI::App* snap_cmd = app.add_subcommand("snapshot", "dump one trajectory for debugging");
  add_common(snap_cmd, &snap_args);
  snap_cmd->add_option("--events", snap_events, "number of events to record");
  snap_cmd->add_option("--until", snap_until, "stop at this model time instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(run_args);
    if (sweep_cmd->parsed()) return do_run(sweep_args);
    if (verify_cmd->parsed()) return do_verify(verify_dir);
    if (snap_cmd->parsed()) return do_snapshot(snap_args, snap_events, snap_until);
  } catch (const dynperc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

// oel: run, aggregate, export and replay open-ended learning experiments.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
// error, 3 chain integrity failure (a stored chain no longer replays).

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oel/harness/aggregate.hpp"
#include "oel/harness/config_io.hpp"
#include "oel/harness/replay.hpp"
#include "oel/harness/run_dir.hpp"

namespace {

using namespace oel;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitChain = 3;

fs::path default_output_root() {
  if (const char* env = std::getenv("OEL_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

struct RunOptions {
  std::string config_path;
  std::string variant;
  std::string seeds;
  std::string out;
  std::vector<std::string> overrides;
  bool dry_run = false;
  bool force = false;
  int jobs = 1;
};

ExperimentConfig resolve_config(const RunOptions& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = harness::load_config_file(o.config_path);
  if (!o.variant.empty()) harness::set_value(cfg, "run.variant", o.variant);
  if (!o.seeds.empty()) cfg.seeds = harness::parse_seeds(o.seeds);
  for (const auto& s : o.overrides) harness::apply_override(cfg, s);
  cfg.validate();
  return cfg;
}

int run_one(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& root, bool force) {
  const fs::path dir = harness::run_directory(root, cfg.variant, seed);
  if (!force && harness::run_complete(dir)) {
    std::cout << dir.string() << ": already complete, skipped\n";
    return kExitOk;
  }
  const RunMetrics m = harness::execute_run(cfg, seed, dir);
  std::cout << dir.string() << ": " << to_string(m.variant) << " seed " << seed << " reached_final=" << m.reached_final
            << " subgoals=" << m.subgoals << " chained_steps=" << m.chained_steps << " episodes=" << m.episodes
            << "\n";
  return kExitOk;
}

int cmd_run(const RunOptions& o) {
  const ExperimentConfig cfg = resolve_config(o);
  if (o.dry_run) {
    std::cout << harness::dump_config(cfg);
    return kExitOk;
  }
  const fs::path root = o.out.empty() ? default_output_root() : fs::path(o.out);
  if (o.jobs <= 1) {
    for (auto seed : cfg.seeds) run_one(cfg, seed, root, o.force);
    return kExitOk;
  }
  // One child process per seed, at most `jobs` at a time.
  int status_all = kExitOk;
  std::size_t next = 0;
  int running = 0;
  auto reap = [&] {
    int status = 0;
    if (wait(&status) > 0) {
      --running;
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) status_all = kExitFailure;
    }
  };
  while (next < cfg.seeds.size() || running > 0) {
    if (next < cfg.seeds.size() && running < o.jobs) {
      const auto seed = cfg.seeds[next++];
      std::cout.flush();
      const pid_t pid = fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) {
        int code = kExitFailure;
        try {
          code = run_one(cfg, seed, root, o.force);
        } catch (const std::exception& e) {
          std::cerr << "seed " << seed << ": " << e.what() << "\n";
        }
        std::cout.flush();
        _exit(code);
      }
      ++running;
    } else {
      reap();
    }
  }
  return status_all;
}

int cmd_aggregate(const std::vector<std::string>& dirs, const std::string& csv, const std::string& md) {
  std::vector<fs::path> roots(dirs.begin(), dirs.end());
  if (roots.empty()) roots.push_back(default_output_root());
  const auto agg = harness::aggregate_runs(roots);
  for (const auto& w : agg.warnings) std::cerr << "warning: " << w << "\n";
  if (agg.runs.empty()) {
    std::cerr << "no completed runs found\n";
    return kExitFailure;
  }
  if (!csv.empty()) {
    std::ofstream f(csv);
    harness::write_summary_csv(f, agg.variants);
  }
  if (!md.empty()) {
    std::ofstream f(md);
    harness::write_summary_markdown(f, agg.variants);
  }
  harness::write_summary_markdown(std::cout, agg.variants);
  return kExitOk;
}

int cmd_replay(const std::string& dir, const std::string& trajectory) {
  std::ofstream traj;
  if (!trajectory.empty()) {
    traj.open(trajectory, std::ios::binary);
    if (!traj) throw ConfigError("cannot write '" + trajectory + "'");
  }
  const auto r = harness::replay_run(dir, trajectory.empty() ? nullptr : &traj);
  std::cout << "links=" << r.link_steps.size() << " steps=" << r.total_steps << " final_x=" << r.final_x
            << " matches_manifest=" << (r.matches_manifest ? "yes" : "no") << "\n";
  return r.matches_manifest ? kExitOk : kExitChain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-ended learning experiments on a procedural side-scroller"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run one or more seeds");
  run_cmd->add_option("--config", run.config_path, "INI config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--variant", run.variant, "N10, N1 or baseline_sparse");
  run_cmd->add_option("--seeds", run.seeds, "Seed list: 1..10 or 1,2,5");
  run_cmd->add_option("--out", run.out, "Output root (default $OEL_OUTPUT_ROOT or ./runs)");
  run_cmd->add_option("--set", run.overrides, "Override a key: section.key=value")->allow_extra_args(false);
  run_cmd->add_option("--jobs,-j", run.jobs, "Seeds to run in parallel processes")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--dry-run", run.dry_run, "Print the resolved config and exit");
  run_cmd->add_flag("--force", run.force, "Rerun seeds whose run directory is already complete");

  std::vector<std::string> agg_dirs;
  std::string agg_csv, agg_md;
  auto* agg_cmd = app.add_subcommand("aggregate", "Summarize completed runs per variant");
  agg_cmd->add_option("dirs", agg_dirs, "Run directories or roots to search");
  agg_cmd->add_option("--csv", agg_csv, "Write the summary as CSV");
  agg_cmd->add_option("--markdown", agg_md, "Write the summary as a Markdown table");

  std::string fig_dir, fig_out;
  auto* fig_cmd = app.add_subcommand("export-figures", "Write path segments and competence curves");
  fig_cmd->add_option("run_dir", fig_dir, "Completed run directory")->required();
  fig_cmd->add_option("--out", fig_out, "Output directory (default <run_dir>/figures)");

  std::string replay_dir, replay_traj;
  auto* replay_cmd = app.add_subcommand("replay", "Re-execute a stored chain and print its steps");
  replay_cmd->add_option("run_dir", replay_dir, "Run directory")->required();
  replay_cmd->add_option("--trajectory", replay_traj, "Write a JSON-lines trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*agg_cmd) return cmd_aggregate(agg_dirs, agg_csv, agg_md);
    if (*fig_cmd) {
      const fs::path out = fig_out.empty() ? fs::path(fig_dir) / "figures" : fs::path(fig_out);
      harness::export_figures(fig_dir, out);
      std::cout << "wrote " << out.string() << "\n";
      return kExitOk;
    }
    if (*replay_cmd) return cmd_replay(replay_dir, replay_traj);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ChainIntegrityError& e) {
    std::cerr << "chain integrity error: " << e.what() << "\n";
    return kExitChain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oel/env/level.hpp"
#include "oel/harness/config_io.hpp"
#include "oel/harness/run_dir.hpp"
#include "oel/nn/checkpoint.hpp"
#include "oel/orchestrator/orchestrator.hpp"

namespace oel::harness {

struct LoadedRun {
  ExperimentConfig config;
  env::LevelSpec level;
  std::vector<ptr::StoredPolicy> policies;
};

inline std::vector<ptr::StoredPolicy> load_policies(const fs::path& run_dir) {
  const fs::path pdir = run_dir / "policies";
  const json manifest = json::parse(read_text_file(pdir / "manifest.json"));
  std::vector<ptr::StoredPolicy> out;
  for (const auto& e : manifest) {
    ptr::StoredPolicy p;
    p.net = nn::load_checkpoint_file<float>((pdir / e.at("file").get<std::string>()).string()).net;
    p.net.set_noise_enabled(false);
    p.start_x = e.at("start_x").get<int>();
    p.goal_x = e.at("goal_x").get<int>();
    p.steps_to_goal = e.at("steps_to_goal").get<int>();
    p.phase_id = e.at("phase_id").get<int>();
    p.competence = e.at("competence").get<double>();
    p.episodes_used = e.at("episodes_used").get<int>();
    out.push_back(std::move(p));
  }
  return out;
}

inline LoadedRun load_run(const fs::path& run_dir) {
  LoadedRun r;
  r.config = load_config_file((run_dir / "config.ini").string());
  r.level = env::level_from_text(read_text_file(run_dir / "level.txt"));
  r.policies = load_policies(run_dir);
  return r;
}

struct ReplayResult {
  int total_steps = 0;
  std::vector<int> link_steps;
  int final_x = 0;
  bool matches_manifest = true;  // every link used exactly steps_to_goal
};

// Re-executes the stored chain. With `trajectory` set, one JSON line per
// decision: link, step, action, x, done, death.
inline ReplayResult replay_run(const fs::path& run_dir, std::ostream* trajectory = nullptr) {
  const LoadedRun run = load_run(run_dir);
  int step = 0;
  auto hook = [&](std::size_t link, env::Action a, const env::StepInfo& info) {
    ++step;
    if (trajectory)
      *trajectory << json{{"link", link},          {"step", step},    {"action", static_cast<int>(a)},
                          {"x", info.x},           {"done", info.done}, {"death", info.death}}
                         .dump()
                  << '\n';
  };
  const ChainResult chain = chain_to_frontier(run.policies, run.level, run.config.env, run.config.ptr, hook);
  ReplayResult out;
  out.total_steps = chain.steps;
  out.link_steps = chain.link_steps;
  out.final_x = chain.session.state.agent_x;
  for (std::size_t i = 0; i < run.policies.size(); ++i)
    if (chain.link_steps[i] != run.policies[i].steps_to_goal) out.matches_manifest = false;
  return out;
}

// Figure data: one segments.csv row per stored policy, plus a copy of each
// competence curve.
inline void export_figures(const fs::path& run_dir, const fs::path& out_dir) {
  if (!run_complete(run_dir)) throw PreconditionError("run directory is not complete: " + run_dir.string());
  const json metrics = json::parse(read_text_file(run_dir / "metrics.json"));
  const json manifest = json::parse(read_text_file(run_dir / "policies" / "manifest.json"));
  fs::create_directories(out_dir / "competence");
  std::ofstream seg(out_dir / "segments.csv", std::ios::binary);
  seg << "variant,seed,index,start_x,goal_x,steps_to_goal\n";
  std::size_t i = 0;
  for (const auto& e : manifest)
    seg << metrics.at("variant").get<std::string>() << ',' << metrics.at("seed").get<std::uint64_t>() << ',' << i++
        << ',' << e.at("start_x").get<int>() << ',' << e.at("goal_x").get<int>() << ','
        << e.at("steps_to_goal").get<int>() << '\n';
  const fs::path cdir = run_dir / "competence";
  if (fs::exists(cdir))
    for (const auto& f : fs::directory_iterator(cdir))
      fs::copy_file(f.path(), out_dir / "competence" / f.path().filename(), fs::copy_options::overwrite_existing);
}

}  // namespace oel::harness

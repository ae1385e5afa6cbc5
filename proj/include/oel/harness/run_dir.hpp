#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oel/env/level.hpp"
#include "oel/errors.hpp"
#include "oel/harness/config_io.hpp"
#include "oel/harness/metrics_json.hpp"
#include "oel/nn/checkpoint.hpp"
#include "oel/orchestrator/orchestrator.hpp"

namespace oel::harness {

namespace fs = std::filesystem;

// <out>/<variant>/seed_<n>
inline fs::path run_directory(const fs::path& out_root, Variant variant, std::uint64_t seed) {
  return out_root / to_string(variant) / ("seed_" + std::to_string(seed));
}

inline std::string zero_pad(std::size_t i, int width = 3) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << i;
  return os.str();
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

// Write to a sibling temp file, then rename, so readers never see a
// half-written file.
inline void write_file_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, text);
  fs::rename(tmp, path);
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A run directory is complete once metrics.json exists; it is written last.
inline bool run_complete(const fs::path& dir) { return fs::exists(dir / "metrics.json"); }

// Streams run events into the run directory.
class RunRecorder : public RunObserver {
 public:
  explicit RunRecorder(const fs::path& dir) : dir_(dir) {
    fs::create_directories(dir_ / "competence");
    fs::create_directories(dir_ / "policies");
    exploration_.open(dir_ / "exploration.jsonl", std::ios::binary);
    phases_.open(dir_ / "phases.jsonl", std::ios::binary);
    if (!exploration_ || !phases_) throw ConfigError("cannot create logs in '" + dir_.string() + "'");
    manifest_ = json::array();
  }

  void on_exploration_episode(const explorer::EpisodeRecord& r) override {
    exploration_ << episode_to_json(r).dump() << '\n';
  }

  void on_phase(const PhaseRecord& p) override {
    phases_ << phase_to_json(p).dump() << '\n';
    phases_.flush();
  }

  void on_subgoal_trained(int index, const explorer::SubGoal& goal, const ptr::TrainOutcome& outcome) override {
    std::ofstream csv(dir_ / "competence" / ("subgoal_" + zero_pad(static_cast<std::size_t>(index)) + ".csv"),
                      std::ios::binary);
    csv << "# g_x=" << goal.g_x << " phase=" << goal.phase_id
        << " result=" << (outcome.result == ptr::TrainResult::achieved ? "achieved" : "failed") << "\n";
    csv << "episode,competence\n";
    for (const auto& [ep, c] : outcome.competence_curve) csv << ep << ',' << format_double(c) << '\n';
  }

  void on_policy_stored(std::size_t index, const ptr::StoredPolicy& p) override {
    const std::string file = "policy_" + zero_pad(index) + ".bin";
    nn::save_checkpoint_file((dir_ / "policies" / file).string(), p.net, static_cast<std::uint64_t>(index));
    manifest_.push_back({{"file", file},
                         {"start_x", p.start_x},
                         {"goal_x", p.goal_x},
                         {"steps_to_goal", p.steps_to_goal},
                         {"phase_id", p.phase_id},
                         {"competence", p.competence},
                         {"episodes_used", p.episodes_used}});
    write_file_atomic(dir_ / "policies" / "manifest.json", manifest_.dump(2) + "\n");
  }

  void on_baseline_progress(long episodes, const BaselineStats& b) override {
    phases_ << json{{"baseline_episodes", episodes},
                    {"goal_reaches", b.goal_reaches},
                    {"tests_run", b.tests_run},
                    {"policy_formed", b.policy_formed}}
                   .dump()
            << '\n';
    phases_.flush();
  }

  void close() {
    exploration_.close();
    phases_.close();
    if (manifest_.empty()) write_file_atomic(dir_ / "policies" / "manifest.json", "[]\n");
  }

 private:
  static std::string format_double(double v) { return detail::format_double(v); }

  fs::path dir_;
  std::ofstream exploration_;
  std::ofstream phases_;
  json manifest_;
};

// Runs one seed into `dir`, replacing whatever was there. Timing goes to
// timing.json so metrics.json stays byte-identical across reruns.
inline RunMetrics execute_run(const ExperimentConfig& config, std::uint64_t seed, const fs::path& dir) {
  config.validate();
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::create_directories(dir);
  ExperimentConfig snapshot = config;
  snapshot.seeds = {seed};
  write_text_file(dir / "config.ini", dump_config(snapshot));
  write_text_file(dir / "level.txt", env::level_to_text(experiment_level(config)));
  const auto t0 = std::chrono::steady_clock::now();
  RunRecorder recorder(dir);
  RunMetrics m = run_experiment(config, seed, recorder);
  recorder.close();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(dir / "timing.json", json{{"wall_seconds", seconds}}.dump(2) + "\n");
  write_file_atomic(dir / "metrics.json", metrics_to_json(m).dump(2) + "\n");
  return m;
}

}  // namespace oel::harness

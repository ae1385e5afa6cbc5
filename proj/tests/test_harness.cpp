#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "oel/harness/aggregate.hpp"
#include "oel/harness/config_io.hpp"
#include "oel/harness/replay.hpp"
#include "oel/harness/run_dir.hpp"

using namespace oel;
using namespace oel::harness;

namespace {

const fs::path kSmoke = fs::path(OEL_SOURCE_DIR) / "configs" / "smoke.ini";

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oel_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Command {
  int status = -1;
  std::string output;
};

Command run_cli(const std::string& args) {
  const std::string cmd = std::string(OEL_CLI_PATH) + " " + args + " 2>&1";
  Command c;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return c;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) c.output += buf;
  const int raw = ::pclose(pipe);
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

json metrics_stub(const std::string& variant, int seed, double subgoals, double episodes, double steps, bool reached) {
  return json{{"variant", variant},   {"seed", seed},           {"subgoals", subgoals},
              {"episodes", episodes}, {"chained_steps", steps}, {"reached_final", reached}};
}

void write_stub_run(const fs::path& dir, const json& metrics) {
  fs::create_directories(dir);
  write_text_file(dir / "config.ini", "[run]\n");
  write_text_file(dir / "metrics.json", metrics.dump(2));
}

}  // namespace

TEST(Config, DumpRoundTrips) {
  ExperimentConfig cfg = load_config_file(kSmoke.string());
  const std::string text = dump_config(cfg);
  ExperimentConfig again;
  apply_config_text(again, text);
  EXPECT_EQ(dump_config(again), text);
  EXPECT_EQ(again.difficulty.name, "trivial");
  EXPECT_EQ(again.ptr.hidden, (std::vector<nn::Index>{32}));
}

TEST(Config, DefaultsCarryTheReferenceConstants) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.n_exploration_episodes, 10);
  EXPECT_EQ(cfg.ptr.competence_window, 30);
  EXPECT_EQ(cfg.ptr.budget_episodes, 10000);
  EXPECT_DOUBLE_EQ(cfg.ptr.competence_threshold, 0.9);
  EXPECT_EQ(cfg.env.episode_cap, 4000);
  EXPECT_EQ(cfg.ptr.episode_cap, 4000);
  EXPECT_EQ(cfg.explorer.action_repeat, 6);
  EXPECT_EQ(cfg.ptr.action_repeat, 4);
  EXPECT_EQ(cfg.env.frame_stack, 4);
}

TEST(Config, VariantSetsItsEpisodeCount) {
  ExperimentConfig cfg;
  set_value(cfg, "run.variant", "N1");
  EXPECT_EQ(cfg.n_exploration_episodes, 1);
  EXPECT_NO_THROW(cfg.validate());
  set_value(cfg, "run.variant", "N10");
  EXPECT_EQ(cfg.n_exploration_episodes, 10);
}

TEST(Config, ErrorsNameTheLine) {
  ExperimentConfig cfg;
  try {
    apply_config_text(cfg, "[run]\nvariant = N10\nbogus = 3\n", "x.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.ini:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply_config_text(cfg, "[ptr]\nbatch_size = many\n"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "variant = N10\n"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "ptr.gamma"), ConfigError);
  EXPECT_THROW(load_config_file("/nonexistent/oel.ini"), ConfigError);
}

TEST(Config, Overrides) {
  ExperimentConfig cfg;
  apply_override(cfg, "ptr.gamma=0.5");
  apply_override(cfg, "explorer.hidden = 8,4");
  EXPECT_DOUBLE_EQ(cfg.ptr.gamma, 0.5);
  EXPECT_EQ(cfg.explorer.hidden, (std::vector<nn::Index>{8, 4}));
}

TEST(Seeds, RangesAndLists) {
  EXPECT_EQ(parse_seeds("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seeds("3,9, 2"), (std::vector<std::uint64_t>{3, 9, 2}));
  EXPECT_EQ(format_seeds({1, 2, 3}), "1..3");
  EXPECT_EQ(format_seeds({5, 1}), "5,1");
  EXPECT_THROW(parse_seeds("4..1"), ConfigError);
  EXPECT_THROW(parse_seeds("x"), ConfigError);
}

TEST(Aggregate, SingleRunHasZeroSpread) {
  const auto s = summarize_variants({summarize_metrics(metrics_stub("N10", 1, 7, 100, 50, true))});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].subgoals.mean, 7.0);
  EXPECT_DOUBLE_EQ(s[0].subgoals.sd, 0.0);
}

TEST(Aggregate, PopulationStandardDeviation) {
  const auto s = summarize_variants({summarize_metrics(metrics_stub("N10", 1, 6, 0, 0, true)),
                                     summarize_metrics(metrics_stub("N10", 2, 8, 0, 0, true))});
  EXPECT_DOUBLE_EQ(s[0].subgoals.mean, 7.0);
  EXPECT_DOUBLE_EQ(s[0].subgoals.sd, 1.0);
}

// The summary of ten stub runs is recomputed here straight from the files.
TEST(Aggregate, MatchesIndependentRecomputation) {
  const fs::path root = temp_dir("agg");
  Rng rng(3);
  std::map<std::string, std::vector<std::array<double, 3>>> truth;
  for (const std::string v : {"N10", "N1"}) {
    for (int seed = 1; seed <= 10; ++seed) {
      const double sg = 3 + static_cast<double>(uniform_index(rng, 20));
      const double ep = 1000 + static_cast<double>(uniform_index(rng, 5000));
      const double st = 50 + static_cast<double>(uniform_index(rng, 200));
      write_stub_run(root / v / ("seed_" + std::to_string(seed)), metrics_stub(v, seed, sg, ep, st, seed != 4));
      truth[v].push_back({sg, ep, st});
    }
  }
  fs::create_directories(root / "N1" / "seed_11");
  write_text_file(root / "N1" / "seed_11" / "config.ini", "[run]\n");  // incomplete

  const Aggregate agg = aggregate_runs({root});
  ASSERT_EQ(agg.runs.size(), 20u);
  ASSERT_EQ(agg.warnings.size(), 1u);
  for (const auto& vs : agg.variants) {
    const auto& rows = truth.at(vs.variant);
    for (int k = 0; k < 3; ++k) {
      double mean = 0.0;
      for (const auto& r : rows) mean += r[k];
      mean /= 10.0;
      double var = 0.0;
      for (const auto& r : rows) var += (r[k] - mean) * (r[k] - mean);
      const double sd = std::sqrt(var / 10.0);
      const Stat& got = k == 0 ? vs.subgoals : k == 1 ? vs.episodes : vs.chained_steps;
      EXPECT_NEAR(got.mean, mean, 1e-9);
      EXPECT_NEAR(got.sd, sd, 1e-9);
    }
    EXPECT_EQ(vs.runs, 10u);
    EXPECT_EQ(vs.reached_final, 9u);
  }
  std::ostringstream csv;
  write_summary_csv(csv, agg.variants);
  EXPECT_NE(csv.str().find("variant"), std::string::npos);
  fs::remove_all(root);
}

class RunDirectory : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = temp_dir("run");
    config_ = load_config_file(kSmoke.string());
    dir_ = run_directory(root_, config_.variant, 1);
    metrics_ = execute_run(config_, 1, dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path root_, dir_;
  static ExperimentConfig config_;
  static RunMetrics metrics_;
};
fs::path RunDirectory::root_, RunDirectory::dir_;
ExperimentConfig RunDirectory::config_;
RunMetrics RunDirectory::metrics_;

TEST_F(RunDirectory, LayoutIsComplete) {
  EXPECT_TRUE(metrics_.reached_final);
  for (const char* f : {"config.ini", "level.txt", "exploration.jsonl", "phases.jsonl", "metrics.json", "timing.json",
                        "policies/manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const ExperimentConfig snap = load_config_file((dir_ / "config.ini").string());
  EXPECT_EQ(snap.seeds, (std::vector<std::uint64_t>{1}));
}

TEST_F(RunDirectory, SegmentsMatchTheManifestAndCoverTheLevel) {
  const fs::path out = root_ / "figures";
  export_figures(dir_, out);
  const json manifest = json::parse(read_text_file(dir_ / "policies" / "manifest.json"));
  std::ifstream seg(out / "segments.csv");
  std::string line;
  std::getline(seg, line);
  EXPECT_EQ(line, "variant,seed,index,start_x,goal_x,steps_to_goal");
  std::size_t i = 0;
  int prev_goal = 0;
  while (std::getline(seg, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 6u);
    ASSERT_LT(i, manifest.size());
    EXPECT_EQ(std::stoi(cells[3]), manifest[i]["start_x"].get<int>());
    EXPECT_EQ(std::stoi(cells[4]), manifest[i]["goal_x"].get<int>());
    EXPECT_EQ(std::stoi(cells[3]), prev_goal);
    prev_goal = std::stoi(cells[4]);
    ++i;
  }
  EXPECT_EQ(i, manifest.size());
  EXPECT_EQ(static_cast<int>(i), metrics_.subgoals);
  EXPECT_EQ(prev_goal, metrics_.goal_x);
}

TEST_F(RunDirectory, AchievedCompetenceCurvesEndAboveThreshold) {
  int achieved = 0;
  for (const auto& f : fs::directory_iterator(dir_ / "competence")) {
    std::ifstream in(f.path());
    std::string header, columns, line, last;
    std::getline(in, header);
    std::getline(in, columns);
    EXPECT_EQ(columns, "episode,competence");
    while (std::getline(in, line)) last = line;
    if (header.find("result=achieved") == std::string::npos) continue;
    ++achieved;
    EXPECT_GE(std::stod(last.substr(last.find(',') + 1)), 0.9) << f.path();
  }
  EXPECT_EQ(achieved, metrics_.subgoals);
}

TEST_F(RunDirectory, ReplayMatchesTheManifest) {
  std::ostringstream traj;
  const ReplayResult r = replay_run(dir_, &traj);
  EXPECT_TRUE(r.matches_manifest);
  EXPECT_EQ(r.total_steps, metrics_.chained_steps);
  EXPECT_EQ(r.final_x, metrics_.goal_x);
  int lines = 0;
  for (char c : traj.str()) lines += c == '\n';
  EXPECT_EQ(lines, r.total_steps);
}

TEST_F(RunDirectory, RerunIsByteIdentical) {
  const fs::path again = root_ / "again";
  execute_run(config_, 1, again);
  EXPECT_EQ(read_text_file(again / "metrics.json"), read_text_file(dir_ / "metrics.json"));
  EXPECT_EQ(read_text_file(again / "exploration.jsonl"), read_text_file(dir_ / "exploration.jsonl"));
  EXPECT_EQ(read_text_file(again / "phases.jsonl"), read_text_file(dir_ / "phases.jsonl"));
}

TEST(Cli, MissingConfigNamesThePath) {
  const auto c = run_cli("run --config /nonexistent/oel.ini");
  EXPECT_NE(c.status, 0);
  EXPECT_NE(c.output.find("/nonexistent/oel.ini"), std::string::npos) << c.output;
}

TEST(Cli, DryRunPrintsTheResolvedConfig) {
  const auto c = run_cli("run --dry-run --variant N1 --set ptr.gamma=0.5");
  EXPECT_EQ(c.status, 0);
  EXPECT_NE(c.output.find("variant = N1"), std::string::npos);
  EXPECT_NE(c.output.find("exploration_episodes = 1"), std::string::npos);
  EXPECT_NE(c.output.find("gamma = 0.5"), std::string::npos);
  EXPECT_NE(c.output.find("competence_window = 30"), std::string::npos);
}

TEST(Cli, BadKeyIsAUsageError) {
  const auto c = run_cli("run --dry-run --set run.bogus=1");
  EXPECT_EQ(c.status, 2);
  EXPECT_NE(c.output.find("bogus"), std::string::npos);
}

TEST(Cli, SeedSweepWritesOneDirectoryPerSeedThenAggregates) {
  const fs::path root = temp_dir("cli");
  const auto run = run_cli("run --config " + kSmoke.string() + " --variant N1 --seeds 1..3 --jobs 2 --out " +
                           root.string());
  ASSERT_EQ(run.status, 0) << run.output;
  for (int s = 1; s <= 3; ++s) EXPECT_TRUE(run_complete(root / "N1" / ("seed_" + std::to_string(s))));
  const auto skip = run_cli("run --config " + kSmoke.string() + " --variant N1 --seeds 2 --out " + root.string());
  EXPECT_NE(skip.output.find("skipped"), std::string::npos);
  const auto agg = run_cli("aggregate " + root.string() + " --csv " + (root / "s.csv").string());
  EXPECT_EQ(agg.status, 0) << agg.output;
  EXPECT_NE(agg.output.find("N1"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "s.csv"));
  const auto rep = run_cli("replay " + (root / "N1" / "seed_1").string());
  EXPECT_EQ(rep.status, 0) << rep.output;
  EXPECT_NE(rep.output.find("matches_manifest=yes"), std::string::npos);
  const auto fig = run_cli("export-figures " + (root / "N1" / "seed_1").string());
  EXPECT_EQ(fig.status, 0) << fig.output;
  EXPECT_TRUE(fs::exists(root / "N1" / "seed_1" / "figures" / "segments.csv"));
  fs::remove_all(root);
}

TEST(Cli, TamperedChainExitsWithTheIntegrityCode) {
  const fs::path root = temp_dir("tamper");
  const fs::path dir = root / "run";
  execute_run(load_config_file(kSmoke.string()), 2, dir);
  json manifest = json::parse(read_text_file(dir / "policies" / "manifest.json"));
  ASSERT_GE(manifest.size(), 1u);
  manifest[0]["start_x"] = 1;
  write_text_file(dir / "policies" / "manifest.json", manifest.dump(2));
  const auto c = run_cli("replay " + dir.string());
  EXPECT_EQ(c.status, 3) << c.output;
  fs::remove_all(root);
}

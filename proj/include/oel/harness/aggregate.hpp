#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oel/harness/run_dir.hpp"

namespace oel::harness {

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // population
  std::size_t n = 0;
};

inline Stat describe(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

inline double pooled_sd(const Stat& a, const Stat& b) { return std::sqrt(0.5 * (a.sd * a.sd + b.sd * b.sd)); }

struct RunSummary {
  fs::path dir;
  std::string variant;
  std::uint64_t seed = 0;
  double subgoals = 0.0;
  double episodes = 0.0;
  double chained_steps = 0.0;
  bool reached_final = false;
  bool baseline_policy_formed = false;
};

struct VariantSummary {
  std::string variant;
  std::size_t runs = 0;
  std::size_t reached_final = 0;
  Stat subgoals;
  Stat episodes;
  Stat chained_steps;
};

struct Aggregate {
  std::vector<RunSummary> runs;
  std::vector<VariantSummary> variants;
  std::vector<std::string> warnings;
};

inline RunSummary summarize_metrics(const json& j, const fs::path& dir = {}) {
  RunSummary r;
  r.dir = dir;
  r.variant = j.at("variant").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.subgoals = j.at("subgoals").get<double>();
  r.episodes = j.at("episodes").get<double>();
  r.chained_steps = j.at("chained_steps").get<double>();
  r.reached_final = j.at("reached_final").get<bool>();
  if (j.contains("baseline")) r.baseline_policy_formed = j["baseline"].at("policy_formed").get<bool>();
  return r;
}

inline std::vector<VariantSummary> summarize_variants(const std::vector<RunSummary>& runs) {
  std::map<std::string, std::vector<const RunSummary*>> by;
  std::vector<std::string> order;
  for (const auto& r : runs) {
    if (!by.count(r.variant)) order.push_back(r.variant);
    by[r.variant].push_back(&r);
  }
  std::vector<VariantSummary> out;
  for (const auto& v : order) {
    VariantSummary s;
    s.variant = v;
    std::vector<double> sg, ep, st;
    for (const auto* r : by[v]) {
      ++s.runs;
      s.reached_final += r->reached_final ? 1 : 0;
      sg.push_back(r->subgoals);
      ep.push_back(r->episodes);
      st.push_back(r->chained_steps);
    }
    s.subgoals = describe(sg);
    s.episodes = describe(ep);
    s.chained_steps = describe(st);
    out.push_back(std::move(s));
  }
  return out;
}

// Collects every directory under `roots` (searched recursively) that looks
// like a run, i.e. holds config.ini. Runs without metrics.json are skipped
// with a warning.
inline Aggregate aggregate_runs(const std::vector<fs::path>& roots) {
  Aggregate agg;
  std::vector<fs::path> dirs;
  for (const auto& root : roots) {
    if (!fs::exists(root)) {
      agg.warnings.push_back("no such directory: " + root.string());
      continue;
    }
    if (fs::exists(root / "config.ini")) dirs.push_back(root);
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_directory() && fs::exists(e.path() / "config.ini")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
  for (const auto& d : dirs) {
    if (!run_complete(d)) {
      agg.warnings.push_back("incomplete run excluded: " + d.string());
      continue;
    }
    try {
      agg.runs.push_back(summarize_metrics(json::parse(read_text_file(d / "metrics.json")), d));
    } catch (const std::exception& e) {
      agg.warnings.push_back("unreadable metrics excluded: " + d.string() + " (" + e.what() + ")");
    }
  }
  std::stable_sort(agg.runs.begin(), agg.runs.end(), [](const RunSummary& a, const RunSummary& b) {
    return a.variant != b.variant ? a.variant < b.variant : a.seed < b.seed;
  });
  agg.variants = summarize_variants(agg.runs);
  return agg;
}

namespace detail {
inline std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}
}  // namespace detail

inline void write_summary_csv(std::ostream& os, const std::vector<VariantSummary>& vs) {
  os << "variant,runs,reached_final,subgoals_mean,subgoals_sd,episodes_mean,episodes_sd,chained_steps_mean,"
        "chained_steps_sd\n";
  for (const auto& v : vs)
    os << v.variant << ',' << v.runs << ',' << v.reached_final << ',' << detail::format_double(v.subgoals.mean) << ','
       << detail::format_double(v.subgoals.sd) << ',' << detail::format_double(v.episodes.mean) << ','
       << detail::format_double(v.episodes.sd) << ',' << detail::format_double(v.chained_steps.mean) << ','
       << detail::format_double(v.chained_steps.sd) << '\n';
}

inline void write_summary_markdown(std::ostream& os, const std::vector<VariantSummary>& vs) {
  os << "| Variant | Runs | Reached goal | Sub-goals | Episodes | Steps |\n";
  os << "|---|---|---|---|---|---|\n";
  auto cell = [](const Stat& s) { return detail::fixed(s.mean) + " ± " + detail::fixed(s.sd); };
  for (const auto& v : vs)
    os << "| " << v.variant << " | " << v.runs << " | " << v.reached_final << " | " << cell(v.subgoals) << " | "
       << cell(v.episodes) << " | " << cell(v.chained_steps) << " |\n";
}

}  // namespace oel::harness

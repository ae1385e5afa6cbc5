#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "oel/errors.hpp"
#include "oel/orchestrator/experiment_config.hpp"

namespace oel::harness {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  std::from_chars_result r{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t pos = 0;
    try {
      value = static_cast<T>(std::stod(text, &pos));
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != text.size() || text.empty()) throw ConfigError(key + ": expected a number, got '" + text + "'");
    return value;
  } else {
    r = std::from_chars(first, last, value);
    if (r.ec != std::errc{} || r.ptr != last) throw ConfigError(key + ": expected an integer, got '" + text + "'");
    return value;
  }
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  std::string s = os.str();
  // Prefer the shortest text that round-trips.
  for (int p = 1; p <= 17; ++p) {
    std::ostringstream t;
    t << std::setprecision(p) << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return s;
}

template <typename T>
std::string join(const std::vector<T>& xs, const char* sep = ",") {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? sep : "") << xs[i];
  return os.str();
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key + ": empty list element");
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

}  // namespace detail

// "1..10", "3", or "1,4,9".
inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const std::string t = detail::trim(text);
  const auto dots = t.find("..");
  if (dots != std::string::npos) {
    const auto lo = detail::parse_number<std::uint64_t>("seeds", detail::trim(t.substr(0, dots)));
    const auto hi = detail::parse_number<std::uint64_t>("seeds", detail::trim(t.substr(dots + 2)));
    if (hi < lo) throw ConfigError("seeds: empty range '" + t + "'");
    std::vector<std::uint64_t> out;
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  auto out = detail::parse_list<std::uint64_t>("seeds", t);
  if (out.empty()) throw ConfigError("seeds: no seeds given");
  return out;
}

inline std::string format_seeds(const std::vector<std::uint64_t>& seeds) {
  bool contiguous = seeds.size() > 1;
  for (std::size_t i = 1; i < seeds.size() && contiguous; ++i) contiguous = seeds[i] == seeds[i - 1] + 1;
  if (contiguous) return std::to_string(seeds.front()) + ".." + std::to_string(seeds.back());
  return detail::join(seeds);
}

struct ConfigKey {
  std::string name;  // section.key
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

// Every tunable, in dump order.
inline const std::vector<ConfigKey>& config_keys() {
  using C = ExperimentConfig;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto add_int = [&](std::string name, auto member) {
      k.push_back({name, [member](const C& c) { return std::to_string(member(const_cast<C&>(c))); },
                   [member, name](C& c, const std::string& v) {
                     using T = std::remove_reference_t<decltype(member(c))>;
                     member(c) = detail::parse_number<T>(name, v);
                   }});
    };
    auto add_real = [&](std::string name, auto member) {
      k.push_back({name, [member](const C& c) { return detail::format_double(member(const_cast<C&>(c))); },
                   [member, name](C& c, const std::string& v) { member(c) = detail::parse_number<double>(name, v); }});
    };
    auto add_list = [&](std::string name, auto member) {
      k.push_back({name, [member](const C& c) { return detail::join(member(const_cast<C&>(c))); },
                   [member, name](C& c, const std::string& v) {
                     member(c) = detail::parse_list<nn::Index>(name, v);
                   }});
    };

    k.push_back({"run.variant", [](const C& c) { return to_string(c.variant); },
                 [](C& c, const std::string& v) {
                   // Also resets N to the variant's default; a later
                   // run.exploration_episodes line overrides it.
                   c.variant = parse_variant(v);
                   c.n_exploration_episodes = default_exploration_episodes(c.variant);
                 }});
    add_int("run.exploration_episodes", [](C& c) -> int& { return c.n_exploration_episodes; });
    k.push_back({"run.seeds", [](const C& c) { return format_seeds(c.seeds); },
                 [](C& c, const std::string& v) { c.seeds = parse_seeds(v); }});
    add_int("run.global_episode_budget", [](C& c) -> long& { return c.global_episode_budget; });
    add_int("run.stall_retries", [](C& c) -> int& { return c.stall_retries; });
    add_real("run.stall_epsilon", [](C& c) -> double& { return c.stall_epsilon; });
    add_int("run.max_consecutive_stalls", [](C& c) -> int& { return c.max_consecutive_stalls; });

    add_int("level.seed", [](C& c) -> std::uint64_t& { return c.level_seed; });
    k.push_back({"level.difficulty", [](const C& c) { return c.difficulty.name; },
                 [](C& c, const std::string& v) { c.difficulty = env::Difficulty::named(v); }});
    add_int("level.length", [](C& c) -> int& { return c.difficulty.length_x; });
    add_int("level.height", [](C& c) -> int& { return c.difficulty.height; });
    add_int("level.min_gap", [](C& c) -> int& { return c.difficulty.min_gap; });
    add_int("level.max_gap", [](C& c) -> int& { return c.difficulty.max_gap; });
    add_int("level.max_pit_width", [](C& c) -> int& { return c.difficulty.max_pit_width; });
    add_int("level.max_wall_height", [](C& c) -> int& { return c.difficulty.max_wall_height; });
    add_int("level.max_hazard_period", [](C& c) -> int& { return c.difficulty.max_hazard_period; });
    add_real("level.pit_weight", [](C& c) -> double& { return c.difficulty.pit_weight; });
    add_real("level.wall_weight", [](C& c) -> double& { return c.difficulty.wall_weight; });
    add_real("level.hazard_weight", [](C& c) -> double& { return c.difficulty.hazard_weight; });

    add_int("env.episode_cap", [](C& c) -> int& { return c.env.episode_cap; });
    add_int("env.jump_rise", [](C& c) -> int& { return c.env.jump_rise; });
    add_int("env.frame_stack", [](C& c) -> int& { return c.env.frame_stack; });

    add_real("explorer.gamma", [](C& c) -> double& { return c.explorer.gamma; });
    add_real("explorer.epsilon_start", [](C& c) -> double& { return c.explorer.epsilon_start; });
    add_real("explorer.epsilon_end", [](C& c) -> double& { return c.explorer.epsilon_end; });
    add_int("explorer.epsilon_decay_steps", [](C& c) -> long& { return c.explorer.epsilon_decay_steps; });
    add_int("explorer.replay_capacity", [](C& c) -> std::size_t& { return c.explorer.replay_capacity; });
    add_int("explorer.batch_size", [](C& c) -> std::size_t& { return c.explorer.batch_size; });
    add_int("explorer.target_sync_every", [](C& c) -> long& { return c.explorer.target_sync_every; });
    add_int("explorer.train_every", [](C& c) -> int& { return c.explorer.train_every; });
    add_int("explorer.learning_starts", [](C& c) -> std::size_t& { return c.explorer.learning_starts; });
    add_real("explorer.learning_rate", [](C& c) -> double& { return c.explorer.learning_rate; });
    add_list("explorer.hidden", [](C& c) -> std::vector<nn::Index>& { return c.explorer.hidden; });
    add_int("explorer.action_repeat", [](C& c) -> int& { return c.explorer.action_repeat; });
    k.push_back({"explorer.candidate_rule",
                 [](const C& c) {
                   return std::string(c.explorer.candidate_rule == explorer::CandidateRule::max_x ? "max_x" : "final_x");
                 },
                 [](C& c, const std::string& v) {
                   if (v == "max_x") c.explorer.candidate_rule = explorer::CandidateRule::max_x;
                   else if (v == "final_x") c.explorer.candidate_rule = explorer::CandidateRule::final_x;
                   else throw ConfigError("explorer.candidate_rule: expected max_x or final_x, got '" + v + "'");
                 }});

    add_real("icm.beta", [](C& c) -> double& { return c.icm.beta; });
    add_real("icm.eta", [](C& c) -> double& { return c.icm.eta; });
    add_int("icm.feature_dim", [](C& c) -> nn::Index& { return c.icm.feature_dim; });
    add_list("icm.encoder_hidden", [](C& c) -> std::vector<nn::Index>& { return c.icm.encoder_hidden; });
    add_list("icm.inverse_hidden", [](C& c) -> std::vector<nn::Index>& { return c.icm.inverse_hidden; });
    add_list("icm.forward_hidden", [](C& c) -> std::vector<nn::Index>& { return c.icm.forward_hidden; });
    add_real("icm.learning_rate", [](C& c) -> double& { return c.icm.learning_rate; });

    add_real("ptr.gamma", [](C& c) -> double& { return c.ptr.gamma; });
    add_int("ptr.batch_size", [](C& c) -> std::size_t& { return c.ptr.batch_size; });
    add_int("ptr.target_sync_every", [](C& c) -> long& { return c.ptr.target_sync_every; });
    add_int("ptr.train_every", [](C& c) -> int& { return c.ptr.train_every; });
    add_int("ptr.learning_starts", [](C& c) -> std::size_t& { return c.ptr.learning_starts; });
    add_real("ptr.learning_rate", [](C& c) -> double& { return c.ptr.learning_rate; });
    add_list("ptr.hidden", [](C& c) -> std::vector<nn::Index>& { return c.ptr.hidden; });
    add_int("ptr.noisy_layers", [](C& c) -> int& { return c.ptr.noisy_layers; });
    add_real("ptr.sigma0", [](C& c) -> double& { return c.ptr.sigma0; });
    add_real("ptr.per_alpha", [](C& c) -> double& { return c.ptr.per.alpha; });
    add_real("ptr.per_beta0", [](C& c) -> double& { return c.ptr.per.beta0; });
    add_real("ptr.per_epsilon", [](C& c) -> double& { return c.ptr.per.epsilon; });
    add_int("ptr.per_capacity", [](C& c) -> std::size_t& { return c.ptr.per_capacity; });
    add_int("ptr.action_repeat", [](C& c) -> int& { return c.ptr.action_repeat; });
    add_int("ptr.competence_window", [](C& c) -> int& { return c.ptr.competence_window; });
    add_int("ptr.budget_episodes", [](C& c) -> int& { return c.ptr.budget_episodes; });
    add_real("ptr.competence_threshold", [](C& c) -> double& { return c.ptr.competence_threshold; });
    add_int("ptr.episode_cap", [](C& c) -> int& { return c.ptr.episode_cap; });
    add_int("ptr.test_episodes", [](C& c) -> int& { return c.ptr.test_episodes; });
    add_int("ptr.test_passes_required", [](C& c) -> int& { return c.ptr.test_passes_required; });

    add_int("baseline.episode_budget", [](C& c) -> long& { return c.baseline_episode_budget; });
    add_real("baseline.final_reward", [](C& c) -> double& { return c.baseline_final_reward; });
    add_int("baseline.log_every", [](C& c) -> int& { return c.baseline_log_every; });
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

inline void set_value(ExperimentConfig& cfg, const std::string& name, const std::string& value) {
  const ConfigKey* k = find_key(name);
  if (!k) throw ConfigError("unknown key '" + name + "'");
  k->set(cfg, value);
}

// "section.key=value" from the command line.
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  set_value(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

// INI-style text: [section] headers, key = value lines, '#' or ';'
// comments. Unknown keys and malformed lines are errors that name the line.
inline void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin = "config") {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(lineno) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where() + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    if (section.empty()) throw ConfigError(where() + "key outside of any [section]");
    const std::string key = section + "." + detail::trim(line.substr(0, eq));
    try {
      set_value(cfg, key, detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
  return cfg;
}

// Fully resolved configuration; reading it back yields the same config.
inline std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.name.find('.');
    const std::string s = k.name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) os << "\n";
      os << "[" << s << "]\n";
      section = s;
    }
    os << k.name.substr(dot + 1) << " = " << k.get(cfg) << "\n";
  }
  return os.str();
}

}  // namespace oel::harness

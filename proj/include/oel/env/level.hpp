#pragma once

#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "oel/errors.hpp"

namespace oel::env {

enum class Tile : std::uint8_t { empty = 0, ground = 1, wall = 2, pit = 3 };

// A ground-level enemy walking back and forth over [x, x + range], one tile
// every `period` ticks. `offset` shifts its starting phase.
struct Hazard {
  int x = 0;
  int range = 1;
  int period = 1;
  int offset = 0;

  int cycle() const { return 2 * range * period; }

  int position(long tick) const {
    const long s = (tick / period + offset) % (2 * range);
    return static_cast<int>(s <= range ? x + s : x + 2 * range - s);
  }

  bool operator==(const Hazard&) const = default;
};

// Row 0 is the ground row (ground or pit); rows above hold walls or air.
// The agent stands in row y when row y-1 below it is solid.
struct LevelSpec {
  int length_x = 0;
  int height = 0;
  std::vector<Tile> tiles;  // row-major, index y * length_x + x
  std::vector<Hazard> hazards;
  int goal_x = 0;
  std::uint64_t seed = 0;

  Tile at(int x, int y) const { return tiles[static_cast<std::size_t>(y) * length_x + x]; }
  void set(int x, int y, Tile t) { tiles[static_cast<std::size_t>(y) * length_x + x] = t; }

  // Outside the grid: x < 0 is a boundary wall, y < 0 is void, y >= height
  // is ceiling, x past the end continues as ground.
  bool solid(int x, int y) const {
    if (y < 0) return false;
    if (x < 0 || y >= height) return true;
    if (x >= length_x) return y == 0;
    const Tile t = at(x, y);
    return t == Tile::ground || t == Tile::wall;
  }

  // Least common multiple of all hazard cycles (1 when there are none).
  int hazard_period() const {
    int l = 1;
    for (const auto& h : hazards) l = std::lcm(l, h.cycle());
    return l;
  }

  bool operator==(const LevelSpec&) const = default;
};

inline LevelSpec make_flat_level(int length_x, int height, std::uint64_t seed = 0) {
  if (length_x < 2 || height < 3) throw ConfigError("flat level too small");
  LevelSpec level;
  level.length_x = length_x;
  level.height = height;
  level.goal_x = length_x - 1;
  level.seed = seed;
  level.tiles.assign(static_cast<std::size_t>(length_x) * height, Tile::empty);
  for (int x = 0; x < length_x; ++x) level.set(x, 0, Tile::ground);
  return level;
}

inline char tile_char(Tile t) {
  switch (t) {
    case Tile::empty: return '.';
    case Tile::ground: return '=';
    case Tile::wall: return '#';
    case Tile::pit: return '_';
  }
  return '?';
}

// Plain-text level format: a header of `key value` lines, then `grid`
// followed by one line per row from the top row down to row 0.
inline void write_level_text(std::ostream& os, const LevelSpec& level) {
  os << "scroller-level 1\n";
  os << "seed " << level.seed << "\n";
  os << "length " << level.length_x << "\n";
  os << "height " << level.height << "\n";
  for (const auto& h : level.hazards)
    os << "hazard " << h.x << ' ' << h.range << ' ' << h.period << ' ' << h.offset << "\n";
  os << "grid\n";
  for (int y = level.height - 1; y >= 0; --y) {
    std::string row(static_cast<std::size_t>(level.length_x), '.');
    for (int x = 0; x < level.length_x; ++x) row[x] = tile_char(level.at(x, y));
    os << row << "\n";
  }
}

inline std::string level_to_text(const LevelSpec& level) {
  std::ostringstream os;
  write_level_text(os, level);
  return os.str();
}

inline LevelSpec read_level_text(std::istream& is) {
  LevelSpec level;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError("level text line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(is, line) || line != "scroller-level 1") fail("missing 'scroller-level 1' header");
  ++line_no;
  bool have_grid = false;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "seed") {
      ls >> level.seed;
    } else if (key == "length") {
      ls >> level.length_x;
    } else if (key == "height") {
      ls >> level.height;
    } else if (key == "hazard") {
      Hazard h;
      ls >> h.x >> h.range >> h.period >> h.offset;
      if (h.range < 1 || h.period < 1) fail("hazard range and period must be positive");
      level.hazards.push_back(h);
    } else if (key == "grid") {
      have_grid = true;
      break;
    } else {
      fail("unknown key '" + key + "'");
    }
    if (!ls) fail("malformed value for '" + key + "'");
  }
  if (!have_grid) fail("missing grid section");
  if (level.length_x < 2 || level.height < 3) fail("bad dimensions");
  level.tiles.assign(static_cast<std::size_t>(level.length_x) * level.height, Tile::empty);
  for (int y = level.height - 1; y >= 0; --y) {
    if (!std::getline(is, line)) fail("grid truncated");
    ++line_no;
    if (static_cast<int>(line.size()) != level.length_x) fail("grid row has wrong width");
    for (int x = 0; x < level.length_x; ++x) {
      switch (line[x]) {
        case '.': level.set(x, y, Tile::empty); break;
        case '=': level.set(x, y, Tile::ground); break;
        case '#': level.set(x, y, Tile::wall); break;
        case '_': level.set(x, y, Tile::pit); break;
        default: fail(std::string("unknown tile '") + line[x] + "'");
      }
    }
  }
  level.goal_x = level.length_x - 1;
  return level;
}

inline LevelSpec level_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_level_text(is);
}

}  // namespace oel::env

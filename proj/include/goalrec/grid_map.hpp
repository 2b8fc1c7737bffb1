#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "goalrec/error.hpp"

namespace goalrec {

struct Cell {
  int x = 0;  // column
  int y = 0;  // row

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) noexcept {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

/// Immutable 4-connected occupancy grid with unit step costs.
///
/// Cells are stored row-major; anything outside the grid reads as blocked.
class GridMap {
 public:
  GridMap(int width, int height, std::vector<std::uint8_t> passable)
      : width_(width), height_(height), passable_(std::move(passable)) {
    if (width <= 0 || height <= 0) throw InvalidArgument("grid dimensions must be positive");
    if (passable_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw InvalidArgument("cell count does not match width*height");
  }

  static GridMap open(int width, int height) {
    return GridMap(width, height,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return passable_.size(); }

  bool in_bounds(Cell c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  bool passable(Cell c) const noexcept { return in_bounds(c) && passable_[index(c)] != 0; }
  bool blocked(Cell c) const noexcept { return !passable(c); }

  std::size_t index(Cell c) const noexcept {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }
  Cell cell_at(std::size_t idx) const noexcept {
    return {static_cast<int>(idx % static_cast<std::size_t>(width_)),
            static_cast<int>(idx / static_cast<std::size_t>(width_))};
  }

  const std::vector<std::uint8_t>& cells() const noexcept { return passable_; }

  std::size_t passable_count() const noexcept {
    std::size_t n = 0;
    for (auto p : passable_) n += p != 0;
    return n;
  }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> passable_;
};

// Offsets in the fixed expansion order N, E, S, W (north is y-1).
inline constexpr Cell kMoves[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};

/// Passable in-bounds cells among N, E, S, W of `c`, in that order.
inline std::vector<Cell> neighbors(const GridMap& map, Cell c) {
  std::vector<Cell> out;
  out.reserve(4);
  for (auto m : kMoves) {
    Cell n{c.x + m.x, c.y + m.y};
    if (map.passable(n)) out.push_back(n);
  }
  return out;
}

inline bool is_passable_terrain(char ch, int line) {
  switch (ch) {
    case '.':
    case 'G':
    case 'S':
      return true;
    case '@':
    case 'O':
    case 'T':
    case 'W':
      return false;
    default:
      throw ParseError(std::string("unknown terrain character '") + ch + "'", line);
  }
}

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  // A trailing newline yields one empty tail line; drop empty tail lines.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline int parse_header_int(const std::string& line, std::string_view key, int lineno) {
  std::istringstream is(line);
  std::string k;
  long v = 0;
  if (!(is >> k >> v) || k != key) throw ParseError("expected '" + std::string(key) + " <n>'", lineno);
  std::string rest;
  if (is >> rest) throw ParseError("trailing characters after " + std::string(key), lineno);
  if (v <= 0 || v > 1 << 16) throw ParseError(std::string(key) + " out of range", lineno);
  return static_cast<int>(v);
}

}  // namespace detail

/// Parses a MovingAI `.map` file (LF or CRLF line endings).
inline GridMap parse_movingai(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.size() < 4) throw ParseError("truncated MovingAI header");
  {
    std::istringstream is(lines[0]);
    std::string k, v;
    if (!(is >> k >> v) || k != "type") throw ParseError("expected 'type <name>'", 1);
  }
  const int height = detail::parse_header_int(lines[1], "height", 2);
  const int width = detail::parse_header_int(lines[2], "width", 3);
  if (lines[3] != "map") throw ParseError("expected 'map'", 4);

  const std::size_t rows = lines.size() - 4;
  if (rows != static_cast<std::size_t>(height))
    throw ParseError("declared height " + std::to_string(height) + " but found " +
                     std::to_string(rows) + " grid rows");

  std::vector<std::uint8_t> cells;
  cells.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const auto& row = lines[4 + static_cast<std::size_t>(y)];
    const int lineno = 5 + y;
    if (row.size() != static_cast<std::size_t>(width))
      throw ParseError("row length " + std::to_string(row.size()) + " != width " +
                           std::to_string(width),
                       lineno);
    for (char ch : row) cells.push_back(is_passable_terrain(ch, lineno) ? 1 : 0);
  }
  return GridMap(width, height, std::move(cells));
}

/// Writes `map` in MovingAI format using '.' and '@'.
inline std::string serialize_movingai(const GridMap& map) {
  std::string out = "type octile\nheight " + std::to_string(map.height()) + "\nwidth " +
                    std::to_string(map.width()) + "\nmap\n";
  out.reserve(out.size() + map.size() + static_cast<std::size_t>(map.height()));
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out.push_back(map.passable({x, y}) ? '.' : '@');
    out.push_back('\n');
  }
  return out;
}

inline GridMap load_movingai(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open map file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_movingai(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void save_movingai(const GridMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write map file: " + path);
  out << serialize_movingai(map);
}

/// Reduces `map` to target_w x target_h. Each target cell covers an evenly
/// partitioned block of source cells and is blocked iff strictly more than half
/// of that block is blocked.
inline GridMap downscale(const GridMap& map, int target_w, int target_h) {
  if (target_w <= 0 || target_h <= 0) throw InvalidArgument("downscale target dimension is 0");
  if (target_w > map.width() || target_h > map.height())
    throw InvalidArgument("downscale target exceeds source dimensions");

  std::vector<std::uint8_t> cells(static_cast<std::size_t>(target_w) * target_h);
  for (int ty = 0; ty < target_h; ++ty) {
    const int y0 = static_cast<int>(static_cast<long long>(ty) * map.height() / target_h);
    const int y1 = static_cast<int>(static_cast<long long>(ty + 1) * map.height() / target_h);
    for (int tx = 0; tx < target_w; ++tx) {
      const int x0 = static_cast<int>(static_cast<long long>(tx) * map.width() / target_w);
      const int x1 = static_cast<int>(static_cast<long long>(tx + 1) * map.width() / target_w);
      int blocked = 0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) blocked += map.blocked({x, y});
      const int total = (x1 - x0) * (y1 - y0);
      cells[static_cast<std::size_t>(ty) * target_w + tx] = 2 * blocked > total ? 0 : 1;
    }
  }
  return GridMap(target_w, target_h, std::move(cells));
}

}  // namespace goalrec

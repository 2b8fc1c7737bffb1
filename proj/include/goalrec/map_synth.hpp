#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "goalrec/grid_map.hpp"
#include "goalrec/random.hpp"

namespace goalrec {

struct SynthMapOptions {
  int width = 128;
  int height = 128;
  double fill = 0.44;     // initial obstacle density of the cave automaton
  int smoothing = 5;      // automaton iterations
  int buildings = 12;     // rectangular obstacles stamped after smoothing
  double min_open = 0.40; // regenerate when the kept region is smaller than this fraction
};

namespace detail {

inline int count_blocked_around(const std::vector<std::uint8_t>& open, int w, int h, int x, int y) {
  int blocked = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h || !open[static_cast<std::size_t>(ny) * w + nx])
        ++blocked;
    }
  return blocked;
}

// Keeps only the largest 4-connected open region.
inline std::size_t keep_largest_region(std::vector<std::uint8_t>& open, int w, int h) {
  std::vector<int> label(open.size(), -1);
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < open.size(); ++start) {
    if (!open[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    std::deque<std::size_t> q{start};
    label[start] = id;
    while (!q.empty()) {
      const auto i = q.front();
      q.pop_front();
      ++size;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (auto m : kMoves) {
        const int nx = x + m.x, ny = y + m.y;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const auto j = static_cast<std::size_t>(ny) * w + nx;
        if (open[j] && label[j] < 0) {
          label[j] = id;
          q.push_back(j);
        }
      }
    }
    sizes.push_back(size);
  }
  if (sizes.empty()) return 0;
  int best = 0;
  for (int i = 1; i < static_cast<int>(sizes.size()); ++i)
    if (sizes[i] > sizes[best]) best = i;
  for (std::size_t i = 0; i < open.size(); ++i) open[i] = label[i] == best;
  return sizes[best];
}

}  // namespace detail

/// Generates a connected cave-and-buildings map in the spirit of RTS game
/// terrain. Deterministic in `seed`.
inline GridMap synthesize_map(std::uint64_t seed, const SynthMapOptions& opt = {}) {
  const int w = opt.width, h = opt.height;
  if (w < 8 || h < 8) throw InvalidArgument("synthesized maps must be at least 8x8");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(seed, attempt);
    std::vector<std::uint8_t> open(static_cast<std::size_t>(w) * h);
    for (auto& c : open) c = unit_uniform(rng) >= opt.fill;

    for (int it = 0; it < opt.smoothing; ++it) {
      auto next = open;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int b = detail::count_blocked_around(open, w, h, x, y);
          auto& cell = next[static_cast<std::size_t>(y) * w + x];
          if (b >= 5) cell = 0;
          else if (b <= 3) cell = 1;
        }
      open = std::move(next);
    }

    for (int b = 0; b < opt.buildings; ++b) {
      const int bw = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w / 10)));
      const int bh = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h / 10)));
      const int x0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w - bw)));
      const int y0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h - bh)));
      for (int y = y0; y < y0 + bh; ++y)
        for (int x = x0; x < x0 + bw; ++x) open[static_cast<std::size_t>(y) * w + x] = 0;
    }

    const auto kept = detail::keep_largest_region(open, w, h);
    if (static_cast<double>(kept) >= opt.min_open * static_cast<double>(open.size()) ||
        attempt >= 64)
      return GridMap(w, h, std::move(open));
  }
}

}  // namespace goalrec

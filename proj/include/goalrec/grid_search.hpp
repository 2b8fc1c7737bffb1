#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "goalrec/error.hpp"
#include "goalrec/grid_map.hpp"
#include "goalrec/random.hpp"

namespace goalrec {

using Cost = double;
inline constexpr Cost kInfinity = std::numeric_limits<double>::infinity();

struct Path {
  std::vector<Cell> cells;  // start .. end inclusive

  int cost() const noexcept { return cells.empty() ? 0 : static_cast<int>(cells.size()) - 1; }
};

/// Checks that every step of `path` moves to a passable 4-neighbour.
inline bool is_valid_path(const GridMap& map, const Path& path) {
  if (path.cells.empty()) return false;
  for (std::size_t i = 0; i < path.cells.size(); ++i) {
    if (!map.passable(path.cells[i])) return false;
    if (i > 0 && manhattan(path.cells[i - 1], path.cells[i]) != 1) return false;
  }
  return true;
}

/// Optimal cost-to-goal for every cell of a map.
class CostField {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  CostField(Cell goal, int width, std::vector<int> values)
      : goal_(goal), width_(width), values_(std::move(values)) {}

  Cell goal() const noexcept { return goal_; }
  const std::vector<int>& values() const noexcept { return values_; }

  Cost at(Cell c) const noexcept {
    if (c.x < 0 || c.y < 0 || c.x >= width_) return kInfinity;
    const auto idx = static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
                     static_cast<std::size_t>(c.x);
    if (idx >= values_.size() || values_[idx] == kUnreachable) return kInfinity;
    return values_[idx];
  }

 private:
  Cell goal_;
  int width_;
  std::vector<int> values_;
};

/// Parameters of the epsilon-over-estimating heuristic: each evaluation returns
/// the admissible value with probability 1-epsilon and value+delta otherwise.
struct NoiseParams {
  double epsilon = 0.25;
  double delta = 10.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in [0,1]");
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  }
};

namespace detail {

struct OpenEntry {
  double f;
  int g;
  std::uint64_t seq;
  std::uint32_t cell;
};

// Lower f first, then higher g, then insertion order (neighbours are pushed N,E,S,W).
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const noexcept {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.seq > b.seq;
  }
};

inline void require_passable(const GridMap& map, Cell c, const char* what) {
  if (!map.passable(c)) throw InvalidArgument(std::string(what) + " cell is not passable");
}

// Shared A* body. With epsilon == 0 no random numbers are drawn.
inline Path astar_impl(const GridMap& map, Cell s, Cell g, double epsilon, double delta, Rng* rng) {
  require_passable(map, s, "start");
  require_passable(map, g, "goal");

  const std::size_t n = map.size();
  std::vector<int> best_g(n, std::numeric_limits<int>::max());
  std::vector<std::uint32_t> parent(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::uint8_t> closed(n, 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  std::uint64_t seq = 0;

  auto heuristic = [&](Cell c) {
    double h = manhattan(c, g);
    if (epsilon > 0.0 && unit_uniform(*rng) < epsilon) h += delta;
    return h;
  };

  const auto s_idx = static_cast<std::uint32_t>(map.index(s));
  const auto g_idx = static_cast<std::uint32_t>(map.index(g));
  best_g[s_idx] = 0;
  open.push({heuristic(s), 0, seq++, s_idx});

  while (!open.empty()) {
    const auto top = open.top();
    open.pop();
    if (closed[top.cell]) continue;
    closed[top.cell] = 1;
    if (top.cell == g_idx) break;
    const Cell c = map.cell_at(top.cell);
    for (auto m : kMoves) {
      const Cell nb{c.x + m.x, c.y + m.y};
      if (!map.passable(nb)) continue;
      const auto ni = static_cast<std::uint32_t>(map.index(nb));
      if (closed[ni]) continue;
      const int ng = top.g + 1;
      if (ng >= best_g[ni]) continue;
      best_g[ni] = ng;
      parent[ni] = top.cell;
      open.push({ng + heuristic(nb), ng, seq++, ni});
    }
  }
  if (!closed[g_idx]) throw NoPath("goal unreachable from start");

  Path path;
  for (auto i = g_idx; i != s_idx; i = parent[i]) path.cells.push_back(map.cell_at(i));
  path.cells.push_back(s);
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

}  // namespace detail

/// Minimum-cost 4-connected path from s to g (Manhattan heuristic, deterministic ties).
inline Path astar(const GridMap& map, Cell s, Cell g) {
  return detail::astar_impl(map, s, g, 0.0, 0.0, nullptr);
}

/// A* driven by an epsilon-over-estimating heuristic; the perturbation is drawn
/// independently at every heuristic evaluation from an RNG seeded by `noise.seed`.
inline Path noisy_astar(const GridMap& map, Cell s, Cell g, const NoiseParams& noise) {
  noise.validate();
  Rng rng = make_rng(noise.seed);
  return detail::astar_impl(map, s, g, noise.epsilon, noise.delta, &rng);
}

/// Breadth-first distances from `g` to every cell (unit costs, symmetric moves).
inline CostField cost_field(const GridMap& map, Cell g) {
  detail::require_passable(map, g, "goal");
  std::vector<int> dist(map.size(), CostField::kUnreachable);
  std::deque<Cell> queue{g};
  dist[map.index(g)] = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    const int d = dist[map.index(c)];
    for (auto m : kMoves) {
      const Cell nb{c.x + m.x, c.y + m.y};
      if (!map.passable(nb)) continue;
      auto& slot = dist[map.index(nb)];
      if (slot != CostField::kUnreachable) continue;
      slot = d + 1;
      queue.push_back(nb);
    }
  }
  return CostField(g, map.width(), std::move(dist));
}

/// Optimal costs of paths s->g that do and do not embed `obs` as a subsequence
/// of their visited cells. Either value may be infinite.
struct ConstrainedCosts {
  Cost compliant = kInfinity;
  Cost noncompliant = kInfinity;
};

enum class Compliance { kCompliant, kNoncompliant, kBoth };

/// Breadth-first search over (cell, matched-prefix-length). The match index
/// advances greedily whenever the visited cell equals the next unmatched
/// observation, which is exact for subsequence embedding.
inline ConstrainedCosts constrained_costs(const GridMap& map, Cell s, Cell g,
                                          std::span<const Cell> obs,
                                          Compliance wanted = Compliance::kBoth) {
  detail::require_passable(map, s, "start");
  detail::require_passable(map, g, "goal");

  const std::size_t n_obs = obs.size();
  const std::size_t layers = n_obs + 1;
  const std::size_t n_cells = map.size();
  std::vector<std::uint8_t> seen(n_cells * layers, 0);

  auto advance = [&](std::size_t k, Cell c) { return (k < n_obs && obs[k] == c) ? k + 1 : k; };

  struct Node {
    std::uint32_t cell;
    std::uint32_t k;
    int cost;
  };
  std::deque<Node> queue;

  ConstrainedCosts out;
  const bool want_c = wanted != Compliance::kNoncompliant;
  const bool want_n = wanted != Compliance::kCompliant;
  const auto g_idx = map.index(g);

  const auto k0 = advance(0, s);
  seen[k0 * n_cells + map.index(s)] = 1;
  queue.push_back({static_cast<std::uint32_t>(map.index(s)), static_cast<std::uint32_t>(k0), 0});

  while (!queue.empty()) {
    const Node node = queue.front();
    queue.pop_front();
    if (node.cell == g_idx) {
      if (node.k == n_obs) {
        if (out.compliant == kInfinity) out.compliant = node.cost;
      } else if (out.noncompliant == kInfinity) {
        out.noncompliant = node.cost;
      }
      if ((!want_c || out.compliant != kInfinity) && (!want_n || out.noncompliant != kInfinity))
        break;
    }
    const Cell c = map.cell_at(node.cell);
    for (auto m : kMoves) {
      const Cell nb{c.x + m.x, c.y + m.y};
      if (!map.passable(nb)) continue;
      const auto nk = advance(node.k, nb);
      // Once every observation is matched, the state can only lead to compliant plans.
      if (!want_c && nk == n_obs) continue;
      const auto ni = map.index(nb);
      auto& flag = seen[nk * n_cells + ni];
      if (flag) continue;
      flag = 1;
      queue.push_back({static_cast<std::uint32_t>(ni), static_cast<std::uint32_t>(nk), node.cost + 1});
    }
  }
  return out;
}

/// Cheapest s->g path whose visited cells contain `obs` in order.
inline Cost compliant_cost(const GridMap& map, Cell s, Cell g, std::span<const Cell> obs) {
  if (obs.empty()) throw InvalidArgument("observation sequence is empty");
  const auto c = constrained_costs(map, s, g, obs, Compliance::kCompliant).compliant;
  if (c == kInfinity) throw NoCompliantPlan("no path from start to goal embeds the observations");
  return c;
}

/// Cheapest s->g path that does not embed `obs`; infinite when every path does.
inline Cost noncompliant_cost(const GridMap& map, Cell s, Cell g, std::span<const Cell> obs) {
  if (obs.empty()) throw InvalidArgument("observation sequence is empty");
  return constrained_costs(map, s, g, obs, Compliance::kNoncompliant).noncompliant;
}

}  // namespace goalrec

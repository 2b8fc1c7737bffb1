#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "goalrec/error.hpp"
#include "goalrec/random.hpp"

namespace goalrec {

using FluentId = std::uint32_t;
using ActionId = std::uint32_t;
using FluentSet = std::vector<FluentId>;  // sorted, unique

struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  FluentSet pre;
  FluentSet add;
  FluentSet del;  // disjoint from add

  // "(name a b)", the form used by observation files.
  std::string signature() const {
    std::string s = "(" + name;
    for (const auto& a : args) s += " " + a;
    return s + ")";
  }
};

/// Fully grounded STRIPS problem with unit action costs.
struct StripsProblem {
  std::vector<std::string> fluents;  // "(on a b)"
  std::vector<GroundAction> actions;
  FluentSet init;
  FluentSet goal;

  // Symbols kept for encoders.
  std::vector<std::string> objects;
  std::vector<std::string> schemas;
  std::size_t max_arity = 0;

  std::optional<FluentId> find_fluent(const std::string& sig) const {
    auto it = fluent_index_.find(sig);
    if (it == fluent_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<ActionId> find_action(const std::string& sig) const {
    auto it = action_index_.find(sig);
    if (it == action_index_.end()) return std::nullopt;
    return it->second;
  }

  FluentId intern_fluent(const std::string& sig) {
    auto [it, inserted] = fluent_index_.try_emplace(sig, static_cast<FluentId>(fluents.size()));
    if (inserted) fluents.push_back(sig);
    return it->second;
  }
  ActionId add_action(GroundAction a) {
    const auto id = static_cast<ActionId>(actions.size());
    if (!action_index_.emplace(a.signature(), id).second)
      throw InvalidArgument("duplicate ground action " + a.signature());
    actions.push_back(std::move(a));
    return id;
  }

 private:
  std::unordered_map<std::string, FluentId> fluent_index_;
  std::unordered_map<std::string, ActionId> action_index_;
};

inline void normalize(FluentSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

/// Fixed-width bitset over the fluents of one problem.
class State {
 public:
  State() = default;
  explicit State(std::size_t n_fluents) : words_((n_fluents + 63) / 64, 0) {}
  State(std::size_t n_fluents, std::span<const FluentId> on) : State(n_fluents) {
    for (auto f : on) set(f);
  }

  bool test(FluentId f) const noexcept { return (words_[f >> 6] >> (f & 63)) & 1U; }
  void set(FluentId f) noexcept { words_[f >> 6] |= std::uint64_t{1} << (f & 63); }
  void reset(FluentId f) noexcept { words_[f >> 6] &= ~(std::uint64_t{1} << (f & 63)); }

  bool contains_all(std::span<const FluentId> fs) const noexcept {
    return std::all_of(fs.begin(), fs.end(), [&](FluentId f) { return test(f); });
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto w : words_) h = (h ^ w) * 1099511628211ULL;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }

  friend bool operator==(const State&, const State&) = default;

 private:
  std::vector<std::uint64_t> words_;
};

inline bool applicable(const GroundAction& a, const State& s) { return s.contains_all(a.pre); }

/// Successor state: deletes first, then adds.
inline State apply(const GroundAction& a, const State& s) {
  State next = s;
  for (auto f : a.del) next.reset(f);
  for (auto f : a.add) next.set(f);
  return next;
}

inline constexpr int kHmaxInfinity = std::numeric_limits<int>::max() / 4;

/// Max-cost relaxed-reachability heuristic (h_max). Admissible and consistent.
class HmaxHeuristic {
 public:
  explicit HmaxHeuristic(const StripsProblem& p) : p_(p), cost_(p.fluents.size()) {}

  int operator()(const State& s, std::span<const FluentId> goal) {
    for (std::size_t f = 0; f < cost_.size(); ++f)
      cost_[f] = s.test(static_cast<FluentId>(f)) ? 0 : kHmaxInfinity;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& a : p_.actions) {
        int c = 0;
        for (auto f : a.pre) {
          c = std::max(c, cost_[f]);
          if (c >= kHmaxInfinity) break;
        }
        if (c >= kHmaxInfinity) continue;
        for (auto f : a.add)
          if (c + 1 < cost_[f]) {
            cost_[f] = c + 1;
            changed = true;
          }
      }
    }
    int h = 0;
    for (auto f : goal) h = std::max(h, cost_[f]);
    return h;
  }

 private:
  const StripsProblem& p_;
  std::vector<int> cost_;
};

struct SearchLimits {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::size_t max_expansions = 0;  // 0 = unlimited

  static SearchLimits within(std::chrono::duration<double> budget) {
    SearchLimits l;
    l.deadline = std::chrono::steady_clock::now() +
                 std::chrono::duration_cast<std::chrono::steady_clock::duration>(budget);
    return l;
  }
};

enum class PlanMode { kAny, kCompliant, kNoncompliant };

struct PlanResult {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<ActionId> plan;
  std::size_t expansions = 0;

  bool solved() const noexcept { return cost != std::numeric_limits<double>::infinity(); }
};

struct PlanNoise {
  double epsilon = 0.0;
  double delta = 1.0;
  Rng* rng = nullptr;
};

namespace detail {

struct SearchKey {
  State state;
  std::uint32_t k;
  friend bool operator==(const SearchKey&, const SearchKey&) = default;
};
struct SearchKeyHash {
  std::size_t operator()(const SearchKey& key) const noexcept {
    return key.state.hash() ^ (static_cast<std::size_t>(key.k) * 0x9E3779B97F4A7C15ULL);
  }
};

}  // namespace detail

/// A* over (state, matched-prefix-length) with h_max. In compliant mode the
/// heuristic is max(h_max, unmatched observations). In noncompliant mode states
/// that have matched every observation are pruned. The match index advances
/// greedily when the applied action equals the next unmatched observation.
inline PlanResult search_plan(const StripsProblem& p, std::span<const FluentId> goal,
                              std::span<const ActionId> obs, PlanMode mode,
                              const SearchLimits& limits = {}, const PlanNoise& noise = {}) {
  const auto n_obs = static_cast<std::uint32_t>(obs.size());
  PlanResult result;
  if (mode == PlanMode::kNoncompliant && n_obs == 0) return result;  // every plan embeds ()

  HmaxHeuristic hmax(p);
  auto heuristic = [&](const State& s, std::uint32_t k) -> double {
    int h = hmax(s, goal);
    if (h >= kHmaxInfinity) return std::numeric_limits<double>::infinity();
    if (mode == PlanMode::kCompliant) h = std::max<int>(h, static_cast<int>(n_obs - k));
    double hv = h;
    if (noise.epsilon > 0.0 && unit_uniform(*noise.rng) < noise.epsilon) hv += noise.delta;
    return hv;
  };
  auto is_goal = [&](const detail::SearchKey& key) {
    if (!key.state.contains_all(goal)) return false;
    switch (mode) {
      case PlanMode::kAny: return true;
      case PlanMode::kCompliant: return key.k == n_obs;
      case PlanMode::kNoncompliant: return key.k < n_obs;
    }
    return false;
  };

  struct NodeRec {
    detail::SearchKey key;
    int g;
    std::int64_t parent;
    ActionId via;
  };
  std::vector<NodeRec> nodes;
  std::unordered_map<detail::SearchKey, std::size_t, detail::SearchKeyHash> index;  // key -> node
  std::vector<std::uint8_t> closed;

  struct Entry {
    double f;
    int g;
    std::uint64_t seq;
    std::size_t node;
  };
  auto order = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.seq > b.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(order)> open(order);
  std::uint64_t seq = 0;

  const State init(p.fluents.size(), p.init);
  {
    detail::SearchKey k0{init, 0};
    const double h0 = heuristic(init, 0);
    if (h0 == std::numeric_limits<double>::infinity()) return result;
    nodes.push_back({k0, 0, -1, 0});
    closed.push_back(0);
    index.emplace(std::move(k0), 0);
    open.push({h0, 0, seq++, 0});
  }

  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    if (closed[top.node] || top.g != nodes[top.node].g) continue;
    closed[top.node] = 1;
    ++result.expansions;
    if (limits.max_expansions && result.expansions > limits.max_expansions)
      throw SearchTimeout("planner expansion budget exhausted");
    if (limits.deadline && (result.expansions & 63) == 0 &&
        std::chrono::steady_clock::now() > *limits.deadline)
      throw SearchTimeout("planner deadline exceeded");

    if (is_goal(nodes[top.node].key)) {
      result.cost = top.g;
      for (auto i = static_cast<std::int64_t>(top.node); nodes[i].parent >= 0; i = nodes[i].parent)
        result.plan.push_back(nodes[i].via);
      std::reverse(result.plan.begin(), result.plan.end());
      return result;
    }

    const State state = nodes[top.node].key.state;
    const auto k = nodes[top.node].key.k;
    for (ActionId a = 0; a < p.actions.size(); ++a) {
      const auto& act = p.actions[a];
      if (!applicable(act, state)) continue;
      const std::uint32_t nk = (k < n_obs && obs[k] == a) ? k + 1 : k;
      if (mode == PlanMode::kNoncompliant && nk == n_obs) continue;
      detail::SearchKey key{apply(act, state), nk};
      const int ng = top.g + 1;
      auto it = index.find(key);
      std::size_t id;
      if (it == index.end()) {
        const double h = heuristic(key.state, nk);
        if (h == std::numeric_limits<double>::infinity()) continue;
        id = nodes.size();
        nodes.push_back({key, ng, static_cast<std::int64_t>(top.node), a});
        closed.push_back(0);
        index.emplace(std::move(key), id);
        open.push({ng + h, ng, seq++, id});
      } else {
        id = it->second;
        if (closed[id] || ng >= nodes[id].g) continue;
        nodes[id].g = ng;
        nodes[id].parent = static_cast<std::int64_t>(top.node);
        nodes[id].via = a;
        const double h = heuristic(nodes[id].key.state, nk);
        open.push({ng + h, ng, seq++, id});
      }
    }
  }
  return result;
}

/// Optimal plan length for `goal` from the initial state.
inline double plan_cost(const StripsProblem& p, std::span<const FluentId> goal,
                        const SearchLimits& limits = {}) {
  auto r = search_plan(p, goal, {}, PlanMode::kAny, limits);
  if (!r.solved()) throw Unsolvable("goal unreachable from the initial state");
  return r.cost;
}
inline double plan_cost(const StripsProblem& p, const SearchLimits& limits = {}) {
  return plan_cost(p, p.goal, limits);
}

/// Cheapest plan that embeds `obs` as a subsequence of its actions.
inline double compliant_plan_cost(const StripsProblem& p, std::span<const FluentId> goal,
                                  std::span<const ActionId> obs, const SearchLimits& limits = {}) {
  auto r = search_plan(p, goal, obs, PlanMode::kCompliant, limits);
  if (!r.solved()) throw Unsolvable("no plan achieves the goal while embedding the observations");
  return r.cost;
}
inline double compliant_plan_cost(const StripsProblem& p, std::span<const ActionId> obs,
                                  const SearchLimits& limits = {}) {
  return compliant_plan_cost(p, p.goal, obs, limits);
}

/// Cheapest plan that does not embed `obs`; infinite when none exists.
inline double noncompliant_plan_cost(const StripsProblem& p, std::span<const FluentId> goal,
                                     std::span<const ActionId> obs,
                                     const SearchLimits& limits = {}) {
  return search_plan(p, goal, obs, PlanMode::kNoncompliant, limits).cost;
}
inline double noncompliant_plan_cost(const StripsProblem& p, std::span<const ActionId> obs,
                                     const SearchLimits& limits = {}) {
  return noncompliant_plan_cost(p, p.goal, obs, limits);
}

/// Plan found with an epsilon-over-estimating h_max, used to synthesize
/// suboptimal observation sequences.
inline std::vector<ActionId> noisy_plan(const StripsProblem& p, std::span<const FluentId> goal,
                                        double epsilon, double delta, Rng& rng,
                                        const SearchLimits& limits = {}) {
  auto r = search_plan(p, goal, {}, PlanMode::kAny, limits, PlanNoise{epsilon, delta, &rng});
  if (!r.solved()) throw Unsolvable("goal unreachable from the initial state");
  return r.plan;
}

}  // namespace goalrec

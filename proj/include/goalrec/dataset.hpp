#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <memory>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "goalrec/error.hpp"
#include "goalrec/grid_search.hpp"
#include "goalrec/pddl.hpp"
#include "goalrec/random.hpp"
#include "goalrec/strips.hpp"

namespace goalrec {

inline constexpr std::array<int, 4> kTruncations = {25, 50, 75, 100};

/// One navigation goal-recognition instance.
struct NavProblem {
  std::string map_id;
  Cell start;
  std::vector<Cell> goals;
  std::size_t true_goal = 0;
  std::vector<Cell> observations;
  int truncation = 100;
  std::size_t path_id = 0;  // problems cut from the same path share this id
};

/// One task-planning goal-recognition instance; the start is the STRIPS initial state.
struct TaskProblem {
  std::string domain_id;
  std::shared_ptr<const StripsProblem> strips;
  std::vector<FluentSet> goals;
  std::size_t true_goal = 0;
  std::vector<ActionId> observations;
  int truncation = 100;
  std::size_t path_id = 0;
};

/// First ceil(percent% * length) items, never fewer than one.
template <class T>
std::vector<T> truncate(std::span<const T> obs, int percent) {
  if (obs.empty()) throw InvalidArgument("cannot truncate an empty observation sequence");
  if (std::find(kTruncations.begin(), kTruncations.end(), percent) == kTruncations.end())
    throw InvalidArgument("truncation must be one of 25, 50, 75, 100");
  const auto len = obs.size();
  auto keep = (static_cast<std::size_t>(percent) * len + 99) / 100;
  keep = std::max<std::size_t>(keep, 1);
  return std::vector<T>(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(keep));
}
template <class T>
std::vector<T> truncate(const std::vector<T>& obs, int percent) {
  return truncate(std::span<const T>(obs), percent);
}

struct Placement {
  Cell start;
  std::vector<Cell> goals;
};

/// Samples a start and `n_goals` goals, all mutually reachable and pairwise at
/// least `min_distance` steps apart. Throws after 1000 failed restarts.
inline Placement place_start_and_goals(const GridMap& map, std::size_t n_goals, Rng& rng,
                                       int min_distance) {
  std::vector<std::size_t> open_cells;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map.cells()[i]) open_cells.push_back(i);
  if (open_cells.size() < n_goals + 1)
    throw InvalidArgument("map has too few passable cells for start and goal placement");

  constexpr int kRestarts = 1000;
  constexpr int kDrawsPerGoal = 50;
  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    std::vector<Cell> chosen{map.cell_at(open_cells[uniform_index(rng, open_cells.size())])};
    std::vector<CostField> fields{cost_field(map, chosen[0])};
    bool ok = true;
    for (std::size_t k = 0; k < n_goals && ok; ++k) {
      ok = false;
      for (int draw = 0; draw < kDrawsPerGoal; ++draw) {
        const Cell c = map.cell_at(open_cells[uniform_index(rng, open_cells.size())]);
        const bool fits = std::all_of(fields.begin(), fields.end(), [&](const CostField& f) {
          const double d = f.at(c);
          return d != kInfinity && d >= min_distance;
        });
        if (!fits) continue;
        chosen.push_back(c);
        fields.push_back(cost_field(map, c));
        ok = true;
        break;
      }
    }
    if (ok) return {chosen[0], std::vector<Cell>(chosen.begin() + 1, chosen.end())};
  }
  throw InvalidArgument("start/goal placement failed: map too constrained");
}

/// Default pairwise separation: a quarter of the half-perimeter.
inline int default_min_separation(const GridMap& map) { return (map.width() + map.height()) / 4; }

struct NavGeneration {
  Placement placement;
  std::vector<NavProblem> problems;  // path-major, truncation-minor
  std::vector<Path> paths;
};

/// Noisy-rational navigation dataset for one map: `n_paths` paths toward
/// uniformly drawn true goals, each cut at every truncation level. Path i uses
/// RNG stream i of `seed`, so the result does not depend on generation order.
inline NavGeneration generate_nav_problems(const GridMap& map, const std::string& map_id,
                                           std::size_t n_goals, std::size_t n_paths,
                                           const NoiseParams& noise, std::uint64_t seed,
                                           int min_distance = -1) {
  noise.validate();
  if (n_goals == 0) throw InvalidArgument("at least one goal is required");
  NavGeneration out;
  Rng placement_rng = make_rng(seed, 0xA11CE);
  out.placement = place_start_and_goals(
      map, n_goals, placement_rng, min_distance >= 0 ? min_distance : default_min_separation(map));
  out.problems.reserve(n_paths * kTruncations.size());
  out.paths.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    Rng rng = make_rng(seed, p);
    const auto goal = static_cast<std::size_t>(uniform_index(rng, n_goals));
    NoiseParams np = noise;
    np.seed = mix_seed(noise.seed, rng());
    Path path = noisy_astar(map, out.placement.start, out.placement.goals[goal], np);
    const std::vector<Cell> obs(path.cells.begin() + 1, path.cells.end());
    for (int t : kTruncations) {
      NavProblem prob;
      prob.map_id = map_id;
      prob.start = out.placement.start;
      prob.goals = out.placement.goals;
      prob.true_goal = goal;
      prob.observations = truncate(obs, t);
      prob.truncation = t;
      prob.path_id = p;
      out.problems.push_back(std::move(prob));
    }
    out.paths.push_back(std::move(path));
  }
  return out;
}

/// Task dataset from noisy plans toward uniformly drawn goals.
inline std::vector<TaskProblem> generate_task_problems(std::shared_ptr<const StripsProblem> strips,
                                                       const std::string& domain_id,
                                                       const std::vector<FluentSet>& goals,
                                                       std::size_t n_plans, double epsilon,
                                                       double delta, std::uint64_t seed) {
  if (goals.empty()) throw InvalidArgument("at least one goal is required");
  std::vector<TaskProblem> out;
  out.reserve(n_plans * kTruncations.size());
  for (std::size_t p = 0; p < n_plans; ++p) {
    Rng rng = make_rng(seed, p);
    const auto goal = static_cast<std::size_t>(uniform_index(rng, goals.size()));
    const auto plan = noisy_plan(*strips, goals[goal], epsilon, delta, rng);
    if (plan.empty()) throw InvalidArgument("goal already holds in the initial state");
    for (int t : kTruncations) {
      TaskProblem prob;
      prob.domain_id = domain_id;
      prob.strips = strips;
      prob.goals = goals;
      prob.true_goal = goal;
      prob.observations = truncate(plan, t);
      prob.truncation = t;
      prob.path_id = p;
      out.push_back(std::move(prob));
    }
  }
  return out;
}

/// Ids of underlying paths assigned to the training side of a grouped split.
inline std::set<std::size_t> split_groups(std::vector<std::size_t> groups, double ratio,
                                          std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0,1)");
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  if (groups.size() < 2) throw InvalidArgument("a split needs at least two underlying paths");
  Rng rng = make_rng(seed, 0x5917);
  shuffle(groups.begin(), groups.end(), rng);
  auto n_train = static_cast<std::size_t>(ratio * static_cast<double>(groups.size()) + 0.5);
  n_train = std::clamp<std::size_t>(n_train, 1, groups.size() - 1);
  return {groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n_train)};
}

/// Seeded split that keeps every truncation of a path on the same side.
template <class Item>
std::pair<std::vector<Item>, std::vector<Item>> split(const std::vector<Item>& items, double ratio,
                                                      std::uint64_t seed) {
  std::vector<std::size_t> groups;
  groups.reserve(items.size());
  for (const auto& it : items) groups.push_back(it.path_id);
  const auto train_ids = split_groups(std::move(groups), ratio, seed);
  std::pair<std::vector<Item>, std::vector<Item>> out;
  for (const auto& it : items) (train_ids.count(it.path_id) ? out.first : out.second).push_back(it);
  return out;
}

// ---- JSON lines -------------------------------------------------------------

inline nlohmann::json cell_json(Cell c) { return nlohmann::json::array({c.x, c.y}); }

inline Cell cell_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("cell must be [x, y]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

inline nlohmann::json to_json(const NavProblem& p) {
  nlohmann::json goals = nlohmann::json::array();
  for (auto g : p.goals) goals.push_back(cell_json(g));
  nlohmann::json obs = nlohmann::json::array();
  for (auto o : p.observations) obs.push_back(cell_json(o));
  return {{"map_id", p.map_id}, {"start", cell_json(p.start)}, {"goals", goals},
          {"true_goal", p.true_goal}, {"observations", obs}, {"truncation", p.truncation},
          {"path_id", p.path_id}};
}

inline NavProblem nav_problem_from_json(const nlohmann::json& j) {
  NavProblem p;
  p.map_id = j.at("map_id").get<std::string>();
  p.start = cell_from_json(j.at("start"));
  for (const auto& g : j.at("goals")) p.goals.push_back(cell_from_json(g));
  p.true_goal = j.at("true_goal").get<std::size_t>();
  for (const auto& o : j.at("observations")) p.observations.push_back(cell_from_json(o));
  p.truncation = j.at("truncation").get<int>();
  p.path_id = j.value("path_id", std::size_t{0});
  if (p.goals.empty() || p.true_goal >= p.goals.size())
    throw ParseError("true_goal does not index the goal list");
  return p;
}

inline void write_jsonl(const std::vector<NavProblem>& problems, std::ostream& out) {
  for (const auto& p : problems) out << to_json(p).dump() << '\n';
}

inline std::vector<NavProblem> read_jsonl(std::istream& in) {
  std::vector<NavProblem> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      out.push_back(nav_problem_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), lineno);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

// ---- External task-domain datasets -------------------------------------------

/// Splits "(on a b), (clear a)" into normalized fluent signatures.
inline std::vector<std::string> parse_atom_list(const std::string& line) {
  static const std::regex atom_re(R"(\(([^()]*)\))");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(line.begin(), line.end(), atom_re); it != std::sregex_iterator();
       ++it) {
    std::istringstream is((*it)[1].str());
    std::string sig = "(", tok;
    while (is >> tok) {
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      sig += (sig.size() > 1 ? " " : "") + tok;
    }
    out.push_back(sig + ")");
  }
  return out;
}

inline FluentSet resolve_fluents(const StripsProblem& p, const std::vector<std::string>& atoms,
                                 const std::string& context) {
  if (atoms.empty()) throw ParseError(context + ": empty hypothesis");
  FluentSet out;
  for (const auto& a : atoms) {
    auto id = p.find_fluent(a);
    if (!id) throw ParseError(context + ": hypothesis atom " + a + " matches no parsed fluent");
    out.push_back(*id);
  }
  normalize(out);
  return out;
}

inline std::vector<std::string> read_nonempty_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  return out;
}

/// Task domain loaded from a directory holding `domain.pddl`, either
/// `template.pddl` (goal written as `<HYPOTHESIS>`) or `problem.pddl`, and
/// `hyps.dat` with one comma-separated goal per line.
struct TaskDomain {
  std::string id;
  std::shared_ptr<const StripsProblem> strips;
  std::vector<FluentSet> goals;
  std::vector<std::string> goal_texts;
};

inline TaskDomain load_task_domain(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto domain_path = dir / "domain.pddl";
  if (!fs::exists(domain_path)) throw Error("missing file: " + domain_path.string());
  const auto hyp_lines = read_nonempty_lines(dir / "hyps.dat");
  if (hyp_lines.empty()) throw ParseError((dir / "hyps.dat").string() + ": no hypotheses");

  fs::path problem_path = dir / "template.pddl";
  std::string problem_text;
  if (fs::exists(problem_path)) {
    problem_text = read_text_file(problem_path.string());
    std::string first;
    for (const auto& a : parse_atom_list(hyp_lines[0])) first += a + " ";
    const auto pos = problem_text.find("<HYPOTHESIS>");
    if (pos != std::string::npos) problem_text.replace(pos, 12, first);
  } else {
    problem_path = dir / "problem.pddl";
    problem_text = read_text_file(problem_path.string());
  }

  TaskDomain td;
  td.id = dir.filename().string();
  StripsProblem sp;
  try {
    sp = parse_pddl(read_text_file(domain_path.string()), problem_text);
  } catch (const ParseError& e) {
    throw ParseError(problem_path.string() + " / " + domain_path.string() + ": " + e.what());
  }
  for (std::size_t i = 0; i < hyp_lines.size(); ++i) {
    td.goals.push_back(resolve_fluents(sp, parse_atom_list(hyp_lines[i]),
                                       (dir / "hyps.dat").string() + ":" + std::to_string(i + 1)));
    td.goal_texts.push_back(hyp_lines[i]);
  }
  td.strips = std::make_shared<const StripsProblem>(std::move(sp));
  return td;
}

/// Reads external benchmark instances. `dir` is either one instance (it
/// contains `obs.dat`) or a directory of instance subdirectories. Every
/// instance also needs `real_hyp.dat`.
inline std::vector<TaskProblem> ingest_external(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("missing directory: " + dir.string());
  std::vector<fs::path> instances;
  if (fs::exists(dir / "obs.dat")) {
    instances.push_back(dir);
  } else {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory()) instances.push_back(e.path());
    std::sort(instances.begin(), instances.end());
    if (instances.empty()) throw Error("missing file: " + (dir / "obs.dat").string());
  }

  std::vector<TaskProblem> out;
  for (std::size_t idx = 0; idx < instances.size(); ++idx) {
    const auto& inst = instances[idx];
    TaskDomain td = load_task_domain(inst);

    const auto real = read_nonempty_lines(inst / "real_hyp.dat");
    if (real.size() != 1) throw ParseError((inst / "real_hyp.dat").string() + ": expected one hypothesis");
    const auto real_set =
        resolve_fluents(*td.strips, parse_atom_list(real[0]), (inst / "real_hyp.dat").string());
    const auto it = std::find(td.goals.begin(), td.goals.end(), real_set);
    if (it == td.goals.end())
      throw ParseError((inst / "real_hyp.dat").string() + ": real hypothesis is not among hyps.dat");

    TaskProblem prob;
    prob.domain_id = td.id;
    prob.strips = td.strips;
    prob.goals = td.goals;
    prob.true_goal = static_cast<std::size_t>(it - td.goals.begin());
    const auto obs_lines = read_nonempty_lines(inst / "obs.dat");
    for (std::size_t i = 0; i < obs_lines.size(); ++i) {
      try {
        prob.observations.push_back(parse_action_ref(*td.strips, obs_lines[i]));
      } catch (const ParseError& e) {
        throw ParseError((inst / "obs.dat").string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    if (prob.observations.empty()) throw ParseError((inst / "obs.dat").string() + ": no observations");
    prob.truncation = 100;
    prob.path_id = idx;
    out.push_back(std::move(prob));
  }
  return out;
}

}  // namespace goalrec

#include <gtest/gtest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "goalrec/harness.hpp"
#include "goalrec/map_synth.hpp"

using namespace goalrec;
namespace fs = std::filesystem;

namespace {

std::vector<std::pair<std::string, GridMap>> small_maps(int n, int size) {
  std::vector<std::pair<std::string, GridMap>> maps;
  for (int i = 0; i < n; ++i)
    maps.push_back({"m" + std::to_string(i), downscale(synthesize_map(500 + static_cast<std::uint64_t>(i)), size, size)});
  return maps;
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.n_paths = 10;
  spec.epochs = 1;
  spec.seed = 77;
  return spec;
}

std::string csv_of(const std::vector<ResultRow>& rows) {
  std::ostringstream s;
  write_results_csv(rows, s);
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("goalrec_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Number of distinct shortest paths from s to every cell.
std::vector<double> shortest_path_counts(const GridMap& m, Cell s) {
  std::vector<int> dist(m.size(), -1);
  std::vector<double> count(m.size(), 0.0);
  std::deque<Cell> q{s};
  dist[m.index(s)] = 0;
  count[m.index(s)] = 1.0;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (auto n : neighbors(m, c)) {
      const auto ni = m.index(n), ci = m.index(c);
      if (dist[ni] < 0) {
        dist[ni] = dist[ci] + 1;
        q.push_back(n);
      }
      if (dist[ni] == dist[ci] + 1) count[ni] += count[ci];
    }
  }
  return count;
}

// Perfect maze from a randomized depth-first carve: a tree, so every path is unique.
GridMap perfect_maze(int cells, std::uint64_t seed) {
  const int n = 2 * cells - 1;
  std::vector<std::uint8_t> open(static_cast<std::size_t>(n) * n, 0);
  auto at = [&](int x, int y) -> std::uint8_t& { return open[static_cast<std::size_t>(y) * n + x]; };
  Rng rng = make_rng(seed);
  std::vector<Cell> stack{{0, 0}};
  at(0, 0) = 1;
  while (!stack.empty()) {
    const Cell c = stack.back();
    std::vector<Cell> next;
    for (const auto& mv : kMoves) {
      const Cell nb{c.x + 2 * mv.x, c.y + 2 * mv.y};
      if (nb.x >= 0 && nb.y >= 0 && nb.x < n && nb.y < n && !at(nb.x, nb.y)) next.push_back(nb);
    }
    if (next.empty()) {
      stack.pop_back();
      continue;
    }
    const Cell nb = next[uniform_index(rng, next.size())];
    at((c.x + nb.x) / 2, (c.y + nb.y) / 2) = 1;
    at(nb.x, nb.y) = 1;
    stack.push_back(nb);
  }
  return GridMap(n, n, open);
}

std::set<std::size_t> argmax_set(const Posterior& p) {
  const auto top = top_goals(p);
  return {top.begin(), top.end()};
}

}  // namespace

TEST(Evaluate, OracleIsPerfect) {
  std::vector<Posterior> posts;
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < 50; ++i) {
    Posterior p(5, 0.0);
    p[i % 5] = 1.0;
    posts.push_back(p);
    truth.push_back(i % 5);
  }
  EXPECT_EQ(evaluate(posts, truth, 0).accuracy, 1.0);
}

TEST(Evaluate, UniformScoresChance) {
  std::vector<Posterior> posts(10000, Posterior(5, 0.2));
  std::vector<std::size_t> truth(10000);
  Rng rng = make_rng(3);
  for (auto& t : truth) t = uniform_index(rng, 5);
  EXPECT_NEAR(evaluate(posts, truth, 1).accuracy, 0.2, 0.02);
  EXPECT_EQ(evaluate(posts, truth, 1).predicted, evaluate(posts, truth, 1).predicted);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate(std::vector<Posterior>{}, std::vector<std::size_t>{}, 0), InvalidArgument);
  EXPECT_THROW(evaluate(std::vector<Posterior>{{1.0}}, std::vector<std::size_t>{0, 0}, 0), InvalidArgument);
}

TEST(RunNavigation, RowCardinality) {
  auto spec = small_spec();
  spec.n_paths = 5;
  const auto out = run_navigation(spec, small_maps(10, 24));
  EXPECT_EQ(out.rows.size(), 132u);
  std::size_t avg = 0;
  for (const auto& r : out.rows) {
    avg += r.map == kAverageMap;
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
    EXPECT_GE(r.online_us, 0.0);
  }
  EXPECT_EQ(avg, 12u);
}

TEST(RunNavigation, AverageIsUnweightedMeanOverMaps) {
  const auto out = run_navigation(small_spec(), small_maps(3, 24));
  for (const auto& a : out.rows) {
    if (a.map != kAverageMap) continue;
    double sum = 0;
    int n = 0;
    for (const auto& r : out.rows)
      if (r.map != kAverageMap && r.method == a.method && r.truncation == a.truncation) {
        sum += r.accuracy;
        ++n;
      }
    EXPECT_EQ(n, 3);
    EXPECT_NEAR(a.accuracy, sum / 3.0, 1e-12);
  }
}

TEST(RunNavigation, MsWithoutCostMapsIsMissingPrerequisite) {
  auto spec = small_spec();
  spec.cost_map_stage = false;
  EXPECT_THROW(run_navigation(spec, small_maps(1, 24)), MissingPrerequisite);
  const auto d = prepare_nav_map(small_maps(1, 24)[0].second, "m0", spec);
  NavArtifacts none;
  spec.methods = {Method::kMS};
  RunOutput out;
  EXPECT_THROW(evaluate_nav_map(d, none, spec, out), MissingPrerequisite);
}

TEST(RunNavigation, DeterministicCsv) {
  const auto maps = small_maps(2, 24);
  const auto a = run_navigation(small_spec(), maps);
  const auto b = run_navigation(small_spec(), maps);
  EXPECT_EQ(csv_of(a.rows), csv_of(b.rows));
  auto other = small_spec();
  other.seed = 78;
  EXPECT_NE(csv_of(a.rows), csv_of(run_navigation(other, maps).rows));
}

TEST(RunNavigation, RowsMatchPersistedPredictions) {
  const auto out = run_navigation(small_spec(), small_maps(2, 24));
  for (const auto& r : out.rows) {
    if (r.map == kAverageMap) continue;
    std::size_t n = 0, correct = 0;
    for (const auto& p : out.predictions)
      if (p.map == r.map && p.method == r.method && p.truncation == r.truncation) {
        ++n;
        correct += p.predicted == p.true_goal;
      }
    EXPECT_EQ(n, r.n);
    EXPECT_NEAR(r.accuracy, static_cast<double>(correct) / static_cast<double>(n), 1e-12);
  }
}

TEST(RunNavigation, MsAndRgAgreeOnUniqueOptimalPaths) {
  const auto map = perfect_maze(16, 31);
  const auto gen = generate_nav_problems(map, "m", 5, 60, NoiseParams{0.0, 1.0, 0}, 5);
  const auto fields = build_cost_fields(map, gen.placement.goals);
  const auto counts = shortest_path_counts(map, gen.placement.start);
  int checked = 0;
  for (std::size_t i = 0; i < gen.paths.size(); ++i) {
    const auto& p = gen.problems[4 * i + 3];
    if (counts[map.index(p.goals[p.true_goal])] != 1.0) continue;
    const NavQuery q{p.start, p.goals, p.observations};
    const auto ms = argmax_set(predict_ms(fields, q, {}));
    const auto rg = argmax_set(predict_rg(map, q, {}));
    EXPECT_EQ(ms, rg) << i;
    EXPECT_TRUE(rg.count(p.true_goal)) << i;
    ++checked;
  }
  EXPECT_EQ(checked, 60);
}

TEST(RunTasks, MicroBlocksRowsForBothMethods) {
  auto spec = small_spec();
  spec.domain = "tasks";
  spec.methods = {Method::kFC, Method::kRG};
  const auto out = run_tasks(spec, {fs::path(GOALREC_DATA_DIR) / "tasks" / "blocks3"});
  ASSERT_EQ(out.rows.size(), 8u);
  for (const auto& r : out.rows) {
    EXPECT_EQ(r.domain, "blocks3");
    EXPECT_EQ(r.timeouts, 0u);
  }
  EXPECT_EQ(csv_of(out.rows), csv_of(run_tasks(spec, {fs::path(GOALREC_DATA_DIR) / "tasks" / "blocks3"}).rows));
}

TEST(RunTasks, MsIsRejected) {
  auto spec = small_spec();
  spec.methods = {Method::kMS};
  EXPECT_THROW(run_tasks(spec, {fs::path(GOALREC_DATA_DIR) / "tasks" / "blocks3"}), InvalidArgument);
}

TEST(RunTasks, UnsupportedPddlNamesFileAndLine) {
  const auto dir = scratch("bad_pddl");
  fs::copy_file(fs::path(GOALREC_DATA_DIR) / "tasks/blocks3/hyps.dat", dir / "hyps.dat");
  fs::copy_file(fs::path(GOALREC_DATA_DIR) / "tasks/blocks3/template.pddl", dir / "template.pddl");
  std::ifstream in(fs::path(GOALREC_DATA_DIR) / "tasks/blocks3/domain.pddl");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  text = std::regex_replace(text, std::regex(R"(\(clear \?x\) \(ontable \?x\))"), "(not (clear ?x)) (ontable ?x)");
  std::ofstream(dir / "domain.pddl") << text;
  auto spec = small_spec();
  spec.methods = {Method::kRG};
  try {
    run_tasks(spec, {dir});
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("domain.pddl"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line"), std::string::npos) << msg;
    EXPECT_NE(msg.find("unsupported construct"), std::string::npos) << msg;
  }
  fs::remove_all(dir);
}

TEST(RunTasks, TimeoutIsFlaggedAndRunContinues) {
  auto spec = small_spec();
  spec.methods = {Method::kRG, Method::kFC};
  spec.rg_timeout_s = 1e-9;
  const auto out = run_tasks(spec, {fs::path(GOALREC_DATA_DIR) / "tasks" / "logistics2"});
  std::size_t fc = 0, flagged = 0;
  for (const auto& r : out.rows) {
    if (r.method == "FC") ++fc;
    if (r.method == "RG" && r.timeouts > 0) ++flagged;
  }
  EXPECT_EQ(fc, 4u);
  EXPECT_EQ(flagged, 4u);
  const auto csv = csv_of(out.rows);
  EXPECT_NE(csv.find(",RG,100,NA,"), std::string::npos) << csv;
}

TEST(Csv, HeaderAndZeroedTimes) {
  std::vector<ResultRow> rows{{"navigation", "m0", "FC", 25, 0.5, 20, 1.25, 33.0, 0}};
  EXPECT_EQ(csv_of(rows), "domain,map,method,truncation,accuracy,n,offline_s,online_us\n"
                          "navigation,m0,FC,25,0.500000,20,0,0\n");
  std::ostringstream timed;
  write_results_csv(rows, timed, true);
  EXPECT_EQ(timed.str(), "domain,map,method,truncation,accuracy,n,offline_s,online_us\n"
                         "navigation,m0,FC,25,0.500000,20,1.250000,33.000\n");
  std::istringstream in(timed.str());
  const auto back = read_results_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].online_us, 33.0);
}

TEST(TimingReport, EmptyAndPerMethod) {
  EXPECT_TRUE(timing_report({}).table.empty());
  std::vector<ResultRow> rows{{"navigation", "m0", "MS", 25, 0.5, 20, 0.001, 2.0, 0},
                              {"navigation", "m1", "MS", 25, 0.5, 20, 0.003, 4.0, 0},
                              {"navigation", "avg", "MS", 25, 0.5, 40, 9.0, 9.0, 0},
                              {"navigation", "m0", "FC", 25, 0.5, 20, 10.0, 70.0, 0}};
  const auto rep = timing_report(rows);
  EXPECT_NE(rep.csv.find("navigation,MS,0.002000,3.000"), std::string::npos) << rep.csv;
  EXPECT_NE(rep.csv.find("navigation,FC,10.000000,70.000"), std::string::npos) << rep.csv;
}

TEST(EmitPlots, PolylinePerMethod) {
  std::vector<ResultRow> rows;
  for (const char* m : {"FC", "MS", "RG"})
    for (int t : kTruncations) rows.push_back({"navigation", "avg", m, t, t / 100.0, 10, 0, 0, 0});
  for (int t : kTruncations) rows.push_back({"blocks3", "-", "FC", t, 0.5, 10, 0, 0, 0});
  const auto dir = scratch("plots");
  const auto files = emit_plots(rows, dir);
  EXPECT_EQ(files.size(), 4u);
  auto read = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  auto count = [](const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
  };
  const auto nav = read(dir / "fig_navigation.svg");
  EXPECT_EQ(count(nav, "<polyline"), 3u);
  const std::regex points("points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(nav.begin(), nav.end(), points); it != std::sregex_iterator(); ++it)
    EXPECT_EQ(count((*it)[1].str(), ","), 4u);
  EXPECT_EQ(count(read(dir / "fig_blocks3.svg"), "<polyline"), 1u);
  EXPECT_EQ(read(dir / "fig_navigation.csv").rfind(kCsvHeader, 0), 0u);
  fs::remove_all(dir);
}

TEST(EmitPlots, UnwritableDirectory) {
  const auto dir = scratch("blocked");
  std::ofstream(dir / "file") << "x";
  std::vector<ResultRow> rows{{"navigation", "avg", "FC", 25, 0.5, 10, 0, 0, 0}};
  EXPECT_THROW(emit_plots(rows, dir / "file" / "sub"), Error);
  fs::remove_all(dir);
}

TEST(Workspace, StagedRunMatchesEndToEnd) {
  auto spec = small_spec();
  const auto maps = small_maps(2, 24);
  const auto whole = run_navigation(spec, maps);

  const auto root = scratch("staged");
  for (const auto& [id, map] : maps) save_nav_map_data(prepare_nav_map(map, id, spec), spec, root);
  for (const auto& dir : list_nav_maps(root)) {
    ExperimentSpec s = spec;
    const auto d = load_nav_map_data(dir, s);
    save_cost_fields_stage(d, dir);
    save_model_stage(d, s, dir);
  }
  ExperimentSpec eval_spec = spec;
  eval_spec.seed = 12345;  // taken from meta.json instead
  const auto staged = evaluate_workspace(root, eval_spec);
  EXPECT_EQ(csv_of(staged.rows), csv_of(whole.rows));
  EXPECT_EQ(staged.predictions.size(), whole.predictions.size());
}

TEST(Workspace, MissingArtifactIsReported) {
  auto spec = small_spec();
  const auto maps = small_maps(1, 24);
  const auto root = scratch("missing");
  save_nav_map_data(prepare_nav_map(maps[0].second, maps[0].first, spec), spec, root);
  spec.methods = {Method::kMS};
  EXPECT_THROW(evaluate_workspace(root, spec), MissingPrerequisite);
  spec.methods = {Method::kRG};
  EXPECT_EQ(evaluate_workspace(root, spec).rows.size(), 8u);
}

TEST(Workspace, LoadRoundTripsProblems) {
  auto spec = small_spec();
  const auto maps = small_maps(1, 24);
  const auto root = scratch("roundtrip");
  const auto d = prepare_nav_map(maps[0].second, maps[0].first, spec);
  save_nav_map_data(d, spec, root);
  ExperimentSpec s;
  const auto back = load_nav_map_data(root / d.id, s);
  EXPECT_EQ(s.seed, spec.seed);
  EXPECT_EQ(back.placement.goals, d.placement.goals);
  EXPECT_EQ(back.map.width(), d.map.width());
  ASSERT_EQ(back.test.size(), d.test.size());
  for (std::size_t i = 0; i < d.test.size(); ++i) EXPECT_EQ(back.test[i].observations, d.test[i].observations);
  EXPECT_THROW(list_nav_maps(root / "nope"), Error);
}

TEST(Workspace, CostFieldsRoundTrip) {
  const auto m = small_maps(1, 24)[0].second;
  std::vector<Cell> goals;
  for (std::size_t i = 0; i < m.size() && goals.size() < 2; ++i) {
    const Cell c{static_cast<int>(i % m.width()), static_cast<int>(i / m.width())};
    if (m.passable(c)) goals.push_back(c);
  }
  const auto fields = build_cost_fields(m, goals);
  const auto back = cost_fields_from_json(cost_fields_to_json(fields, m.width()));
  ASSERT_EQ(back.size(), fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    EXPECT_EQ(back[i].goal(), fields[i].goal());
    EXPECT_EQ(back[i].values(), fields[i].values());
  }
}

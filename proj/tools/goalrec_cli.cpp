#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "goalrec/harness.hpp"
#include "goalrec/map_synth.hpp"

namespace fs = std::filesystem;
using namespace goalrec;

namespace {

struct Options {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::vector<std::string> maps;
  std::vector<std::string> tasks;
  std::string domain = "navigation";
  double epsilon = 0.25;
  double delta = 10.0;
  double task_epsilon = 0.25;
  double task_delta = 2.0;
  std::string methods = "FC,MS,RG";
  std::size_t epochs = 15;
  double beta = 1.0;
  std::size_t goals = 5;
  std::size_t paths = 100;
  int size = 64;
  double drop_rate = 0.1;
  double timeout = 60.0;
  bool with_times = false;
  std::string results;
};

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  for (std::string m; std::getline(ss, m, ',');)
    if (!m.empty()) out.push_back(parse_method(m));
  return out;
}

ExperimentSpec make_spec(const Options& o) {
  ExperimentSpec spec;
  spec.domain = o.domain;
  spec.methods = parse_methods(o.methods);
  spec.seed = o.seed;
  spec.noise.epsilon = o.epsilon;
  spec.noise.delta = o.delta;
  spec.n_goals = o.goals;
  spec.n_paths = o.paths;
  spec.epochs = o.epochs;
  spec.drop_rate = o.drop_rate;
  spec.recognizer.beta = o.beta;
  spec.rg_timeout_s = o.timeout;
  return spec;
}

// "synth:N" expands to N synthesized maps; anything else is a MovingAI file.
std::vector<std::pair<std::string, GridMap>> load_maps(const Options& o) {
  if (o.maps.empty()) throw InvalidArgument("--maps is required");
  std::vector<std::pair<std::string, GridMap>> maps;
  for (const auto& m : o.maps) {
    if (m.rfind("synth:", 0) == 0) {
      const int n = std::stoi(m.substr(6));
      for (int i = 0; i < n; ++i) {
        const auto raw = synthesize_map(mix_seed(o.seed, 0x5A00 + static_cast<std::uint64_t>(i)));
        maps.push_back({"synth" + std::to_string(i), downscale(raw, o.size, o.size)});
      }
      continue;
    }
    auto map = load_movingai(m);
    if (map.width() > o.size || map.height() > o.size) map = downscale(map, o.size, o.size);
    maps.push_back({fs::path(m).stem().string(), std::move(map)});
  }
  return maps;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_outputs(const RunOutput& run, const fs::path& dir, bool with_times) {
  fs::create_directories(dir);
  std::ostringstream results, preds;
  write_results_csv(run.rows, results, with_times);
  write_predictions_csv(run.predictions, preds);
  write_file(dir / "results.csv", results.str());
  write_file(dir / "predictions.csv", preds.str());
  const auto rep = timing_report(run.rows);
  write_file(dir / "timing.csv", rep.csv);
  write_file(dir / "timing.txt", rep.table);
  emit_plots(run.rows, dir);
  std::cout << rep.table;
  std::cout << "wrote " << run.rows.size() << " rows to " << (dir / "results.csv").string() << "\n";
}

void cmd_gen_nav(const Options& o) {
  auto spec = make_spec(o);
  spec.noise.validate();
  for (const auto& [id, map] : load_maps(o)) {
    const auto d = prepare_nav_map(map, id, spec);
    save_nav_map_data(d, spec, o.out);
    std::cout << id << ": " << d.train.size() << " train, " << d.test.size() << " test problems\n";
  }
}

void cmd_costmap(const Options& o) {
  for (const auto& dir : list_nav_maps(o.out)) {
    ExperimentSpec spec;
    save_cost_fields_stage(load_nav_map_data(dir, spec), dir);
    std::cout << dir.filename().string() << ": cost maps written\n";
  }
}

void cmd_train(const Options& o) {
  for (const auto& dir : list_nav_maps(o.out)) {
    ExperimentSpec spec = make_spec(o);
    const auto d = load_nav_map_data(dir, spec);
    save_model_stage(d, spec, dir);
    std::cout << dir.filename().string() << ": model trained on " << d.train.size() << " problems\n";
  }
}

void cmd_eval(const Options& o) {
  write_outputs(evaluate_workspace(o.out, make_spec(o)), o.out, o.with_times);
}

void cmd_compare(const Options& o) {
  auto spec = make_spec(o);
  RunOutput run;
  if (o.domain == "navigation") {
    run = run_navigation(spec, load_maps(o));
  } else if (o.domain == "tasks") {
    if (o.tasks.empty()) throw InvalidArgument("--tasks is required for the tasks domain");
    std::vector<fs::path> dirs(o.tasks.begin(), o.tasks.end());
    run = run_tasks(spec, dirs, TaskSpec{o.task_epsilon, o.task_delta});
  } else {
    throw InvalidArgument("unknown domain '" + o.domain + "' (expected navigation or tasks)");
  }
  write_outputs(run, o.out, o.with_times);
}

void cmd_report(const Options& o) {
  if (o.results.empty()) throw InvalidArgument("--results is required");
  std::ifstream in(o.results);
  if (!in) throw Error("cannot read " + o.results);
  const auto rows = read_results_csv(in);
  fs::create_directories(o.out);
  const auto rep = timing_report(rows);
  write_file(fs::path(o.out) / "timing.csv", rep.csv);
  write_file(fs::path(o.out) / "timing.txt", rep.table);
  for (const auto& p : emit_plots(rows, o.out)) std::cout << "wrote " << p.string() << "\n";
  std::cout << rep.table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal recognition toolkit: dataset generation, recognizers and benchmarks"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output or workspace directory");
  };
  auto nav_gen = [&](CLI::App* sub) {
    sub->add_option("--maps", o.maps, "MovingAI .map files, or synth:N for N synthesized maps");
    sub->add_option("--epsilon", o.epsilon, "Probability of an over-estimated heuristic value")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--delta", o.delta, "Heuristic over-estimate")->check(CLI::PositiveNumber);
    sub->add_option("--goals", o.goals, "Goals per map")->check(CLI::PositiveNumber);
    sub->add_option("--paths", o.paths, "Paths per map")->check(CLI::PositiveNumber);
    sub->add_option("--size", o.size, "Maps larger than this are downscaled to size x size")->check(CLI::PositiveNumber);
  };
  auto methods = [&](CLI::App* sub) {
    sub->add_option("--methods", o.methods, "Comma-separated subset of FC,MS,RG");
    sub->add_option("--beta", o.beta, "Likelihood rationality parameter")->check(CLI::PositiveNumber);
    sub->add_flag("--with-times", o.with_times, "Write measured times into results.csv");
  };
  auto training = [&](CLI::App* sub) {
    sub->add_option("--epochs", o.epochs, "Training epochs");
    sub->add_option("--drop-rate", o.drop_rate, "Dropout rate of hidden layers")->check(CLI::Range(0.0, 0.99));
  };

  auto* gen = app.add_subcommand("gen-nav", "Generate navigation problems per map into a workspace");
  common(gen);
  nav_gen(gen);

  auto* costmap = app.add_subcommand("costmap", "Precompute goal cost maps for every map in a workspace");
  common(costmap);

  auto* trn = app.add_subcommand("train", "Train the FC network for every map in a workspace");
  common(trn);
  training(trn);

  auto* ev = app.add_subcommand("eval", "Evaluate methods on a workspace using the artifacts on disk");
  common(ev);
  methods(ev);

  auto* cmp = app.add_subcommand("compare", "Run a full experiment end to end");
  common(cmp);
  nav_gen(cmp);
  methods(cmp);
  training(cmp);
  cmp->add_option("--domain", o.domain, "navigation or tasks");
  cmp->add_option("--tasks", o.tasks, "Task domain directories (domain.pddl, template.pddl, hyps.dat)");
  cmp->add_option("--task-epsilon", o.task_epsilon, "Heuristic noise probability for task plans")->check(CLI::Range(0.0, 1.0));
  cmp->add_option("--task-delta", o.task_delta, "Heuristic over-estimate for task plans")->check(CLI::PositiveNumber);
  cmp->add_option("--timeout", o.timeout, "Per-prediction RG time limit in seconds")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Timing table and charts from a results CSV");
  rep->add_option("--results", o.results, "results.csv to read")->required();
  rep->add_option("--out", o.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) cmd_gen_nav(o);
    else if (*costmap) cmd_costmap(o);
    else if (*trn) cmd_train(o);
    else if (*ev) cmd_eval(o);
    else if (*cmp) cmd_compare(o);
    else if (*rep) cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

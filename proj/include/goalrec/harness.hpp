#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "goalrec/dataset.hpp"
#include "goalrec/encoding.hpp"
#include "goalrec/grid_search.hpp"
#include "goalrec/mlp.hpp"
#include "goalrec/recognizer.hpp"

namespace goalrec {

inline constexpr const char* kCsvHeader = "domain,map,method,truncation,accuracy,n,offline_s,online_us";
inline constexpr const char* kAverageMap = "avg";

struct ExperimentSpec {
  std::string domain = "navigation";
  std::vector<Method> methods{Method::kFC, Method::kMS, Method::kRG};
  NoiseParams noise{0.25, 10.0, 0};
  std::uint64_t seed = 0;
  std::size_t n_goals = 5;
  std::size_t n_paths = 100;  // plans per domain for task experiments
  double train_ratio = 0.8;
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double drop_rate = 0.1;
  std::size_t max_obs = 10;
  RecognizerConfig recognizer;
  bool cost_map_stage = true;  // M-S needs its cost fields built offline
  double rg_timeout_s = 60.0;

  bool uses(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

  void validate(bool navigation) const {
    if (methods.empty()) throw InvalidArgument("method list is empty");
    if (!navigation && uses(Method::kMS)) throw InvalidArgument("MS applies only to navigation domains");
    if (navigation && uses(Method::kMS) && !cost_map_stage)
      throw MissingPrerequisite("MS requires the cost-map stage");
    if (!(rg_timeout_s > 0.0)) throw InvalidArgument("RG timeout must be positive");
    noise.validate();
  }
};

struct ResultRow {
  std::string domain;
  std::string map;
  std::string method;
  int truncation = 100;
  double accuracy = 0.0;
  std::size_t n = 0;
  double offline_s = 0.0;
  double online_us = 0.0;
  std::size_t timeouts = 0;  // predictions abandoned at the RG time ceiling

  auto key() const { return std::tie(domain, map, method, truncation); }
};

/// One scored test problem, kept so accuracies can be audited.
struct PredictionRecord {
  std::string domain;
  std::string map;
  std::string method;
  int truncation = 100;
  std::size_t problem = 0;
  std::size_t path_id = 0;
  std::size_t true_goal = 0;
  std::optional<std::size_t> predicted;  // empty when the prediction timed out
};

struct RunOutput {
  std::vector<ResultRow> rows;
  std::vector<PredictionRecord> predictions;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::size_t> predicted;
};

/// Tie-broken top-1 accuracy. Ties draw from a stream seeded by `seed`.
inline EvalResult evaluate(std::span<const Posterior> posteriors, std::span<const std::size_t> truth,
                           std::uint64_t seed) {
  if (posteriors.empty()) throw InvalidArgument("nothing to evaluate");
  if (posteriors.size() != truth.size()) throw InvalidArgument("prediction/label count mismatch");
  Rng rng = make_rng(seed, 0xE7A1);
  EvalResult r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    r.predicted.push_back(predict_goal(posteriors[i], rng));
    correct += r.predicted.back() == truth[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(posteriors.size());
  return r;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Posteriors for a block of problems plus per-problem online time.
struct Scored {
  std::vector<std::optional<Posterior>> posteriors;
  std::vector<double> online_us;
};

// Groups per-problem posteriors by truncation into rows and prediction records.
template <class Problem>
void score_rows(const std::string& domain, const std::string& map, Method method,
                const std::vector<Problem>& test, const Scored& scored, double offline_s, std::uint64_t seed,
                RunOutput& out) {
  for (int t : kTruncations) {
    std::vector<Posterior> posts;
    std::vector<std::size_t> truth, index;
    std::size_t timeouts = 0;
    double us = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test[i].truncation != t) continue;
      us += scored.online_us[i];
      if (!scored.posteriors[i]) {
        ++timeouts;
        out.predictions.push_back({domain, map, method_name(method), t, i, test[i].path_id, test[i].true_goal, {}});
        continue;
      }
      posts.push_back(*scored.posteriors[i]);
      truth.push_back(test[i].true_goal);
      index.push_back(i);
    }
    const std::size_t n = posts.size() + timeouts;
    if (n == 0) continue;
    ResultRow row{domain, map, method_name(method), t, 0.0, n, offline_s, 0.0, timeouts};
    if (!posts.empty()) {
      const auto ev = evaluate(posts, truth, mix_seed(seed, static_cast<std::uint64_t>(t)));
      std::size_t correct = 0;
      for (std::size_t k = 0; k < index.size(); ++k) {
        const auto i = index[k];
        correct += ev.predicted[k] == truth[k];
        out.predictions.push_back(
            {domain, map, method_name(method), t, i, test[i].path_id, test[i].true_goal, ev.predicted[k]});
      }
      row.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    }
    row.online_us = us / static_cast<double>(n);
    out.rows.push_back(row);
  }
}

inline std::uint64_t stream_of(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

}  // namespace detail

// ---- Navigation ---------------------------------------------------------------

struct NavMapData {
  std::string id;
  GridMap map;
  Placement placement;
  std::vector<NavProblem> train;
  std::vector<NavProblem> test;
};

inline std::uint64_t map_seed(const ExperimentSpec& spec, const std::string& map_id) {
  return mix_seed(spec.seed, detail::stream_of(map_id));
}

/// Generates and splits one map's problems.
inline NavMapData prepare_nav_map(const GridMap& map, const std::string& map_id, const ExperimentSpec& spec) {
  const auto seed = map_seed(spec, map_id);
  NoiseParams noise = spec.noise;
  noise.seed = mix_seed(seed, 0x4015E);
  auto gen = generate_nav_problems(map, map_id, spec.n_goals, spec.n_paths, noise, seed);
  auto [train, test] = split(gen.problems, spec.train_ratio, mix_seed(seed, 0x5B117));
  return {map_id, map, gen.placement, std::move(train), std::move(test)};
}

inline std::vector<std::size_t> nav_fc_architecture(const ExperimentSpec& spec) {
  return {2 * spec.max_obs, 200, 200, 200, 200, spec.n_goals};
}

inline MlpModel train_nav_fc(const NavMapData& d, const ExperimentSpec& spec) {
  std::vector<EncodedExample> data;
  data.reserve(d.train.size());
  for (const auto& p : d.train) data.push_back(encode_nav(p, d.map, spec.max_obs));
  const auto seed = mix_seed(map_seed(spec, d.id), 0xFC);
  auto model = init_mlp(nav_fc_architecture(spec), seed, spec.drop_rate);
  TrainConfig cfg;
  cfg.epochs = spec.epochs;
  cfg.batch_size = spec.batch_size;
  cfg.seed = seed;
  train(model, data, cfg);
  return model;
}

inline std::vector<CostField> build_cost_fields(const GridMap& map, std::span<const Cell> goals) {
  std::vector<CostField> fields;
  fields.reserve(goals.size());
  for (auto g : goals) fields.push_back(cost_field(map, g));
  return fields;
}

/// Offline products for one map; each is optional so stages can run separately.
struct NavArtifacts {
  std::optional<MlpModel> fc;
  double fc_offline_s = 0.0;
  std::optional<std::vector<CostField>> fields;
  double ms_offline_s = 0.0;
};

inline NavArtifacts build_nav_artifacts(const NavMapData& d, const ExperimentSpec& spec) {
  NavArtifacts a;
  if (spec.uses(Method::kFC)) {
    const auto t0 = detail::Clock::now();
    a.fc = train_nav_fc(d, spec);
    a.fc_offline_s = detail::seconds_since(t0);
  }
  if (spec.uses(Method::kMS) && spec.cost_map_stage) {
    const auto t0 = detail::Clock::now();
    a.fields = build_cost_fields(d.map, d.placement.goals);
    a.ms_offline_s = detail::seconds_since(t0);
  }
  return a;
}

/// Scores every requested method on one map's test split.
inline void evaluate_nav_map(const NavMapData& d, const NavArtifacts& a, const ExperimentSpec& spec,
                             RunOutput& out) {
  const auto seed = map_seed(spec, d.id);
  for (Method m : spec.methods) {
    detail::Scored s;
    double offline = 0.0;
    if (m == Method::kFC && !a.fc) throw MissingPrerequisite("FC requires a trained model for map " + d.id);
    if (m == Method::kMS && !a.fields) throw MissingPrerequisite("MS requires cost maps for map " + d.id);
    if (m == Method::kFC) offline = a.fc_offline_s;
    if (m == Method::kMS) offline = a.ms_offline_s;
    for (const auto& p : d.test) {
      const auto t0 = detail::Clock::now();
      Posterior post;
      const NavQuery q{p.start, p.goals, p.observations};
      switch (m) {
        case Method::kFC: post = forward(*a.fc, encode_nav(p, d.map, spec.max_obs).features); break;
        case Method::kMS: post = predict_ms(*a.fields, q, spec.recognizer); break;
        case Method::kRG: post = predict_rg(d.map, q, spec.recognizer); break;
      }
      s.online_us.push_back(1e6 * detail::seconds_since(t0));
      s.posteriors.emplace_back(std::move(post));
    }
    detail::score_rows(spec.domain, d.id, m, d.test, s, offline, mix_seed(seed, static_cast<std::uint64_t>(m)), out);
  }
}

/// Unweighted mean over maps for each (domain, method, truncation).
inline std::vector<ResultRow> average_rows(const std::vector<ResultRow>& rows) {
  struct Acc {
    double acc = 0, off = 0, on = 0;
    std::size_t n = 0, maps = 0, timeouts = 0;
  };
  std::map<std::tuple<std::string, std::string, int>, Acc> groups;
  for (const auto& r : rows) {
    if (r.map == kAverageMap) continue;
    auto& g = groups[{r.domain, r.method, r.truncation}];
    g.acc += r.accuracy;
    g.off += r.offline_s;
    g.on += r.online_us;
    g.n += r.n;
    g.timeouts += r.timeouts;
    ++g.maps;
  }
  std::vector<ResultRow> out;
  for (const auto& [k, g] : groups) {
    const double m = static_cast<double>(g.maps);
    out.push_back({std::get<0>(k), kAverageMap, std::get<1>(k), std::get<2>(k), g.acc / m, g.n, g.off / m, g.on / m,
                   g.timeouts});
  }
  return out;
}

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
}

/// End-to-end navigation protocol: per map generate, split, build offline
/// artifacts, evaluate; then append cross-map averages.
inline RunOutput run_navigation(const ExperimentSpec& spec, const std::vector<std::pair<std::string, GridMap>>& maps) {
  spec.validate(true);
  if (maps.empty()) throw InvalidArgument("no maps given");
  RunOutput out;
  for (const auto& [id, map] : maps) {
    const auto d = prepare_nav_map(map, id, spec);
    evaluate_nav_map(d, build_nav_artifacts(d, spec), spec, out);
  }
  auto avg = average_rows(out.rows);
  out.rows.insert(out.rows.end(), avg.begin(), avg.end());
  sort_rows(out.rows);
  return out;
}

// ---- Staged navigation workspace ------------------------------------------------
//
// <root>/<map id>/ holds map.map, meta.json, train.jsonl and test.jsonl after
// generation, then costmaps.json, model.json and offline.json as stages run.

inline nlohmann::json cost_fields_to_json(std::span<const CostField> fields, int width) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : fields) {
    nlohmann::json values = nlohmann::json::array();
    for (int v : f.values()) values.push_back(v == CostField::kUnreachable ? -1 : v);
    arr.push_back({{"goal", cell_json(f.goal())}, {"width", width}, {"values", std::move(values)}});
  }
  return arr;
}

inline std::vector<CostField> cost_fields_from_json(const nlohmann::json& j) {
  std::vector<CostField> fields;
  try {
    for (const auto& f : j) {
      std::vector<int> values;
      for (const auto& v : f.at("values")) {
        const int x = v.get<int>();
        values.push_back(x < 0 ? CostField::kUnreachable : x);
      }
      fields.emplace_back(cell_from_json(f.at("goal")), f.at("width").get<int>(), std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad cost map: ") + e.what(), 0);
  }
  return fields;
}

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline void update_offline(const std::filesystem::path& dir, const char* method, double seconds) {
  const auto path = dir / "offline.json";
  nlohmann::json j = std::filesystem::exists(path) ? read_json_file(path) : nlohmann::json::object();
  j[method] = seconds;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace detail

/// Writes one map's generated problems. The spec fields that later stages
/// depend on go to meta.json.
inline void save_nav_map_data(const NavMapData& d, const ExperimentSpec& spec, const std::filesystem::path& root) {
  const auto dir = root / d.id;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string());
  save_movingai(d.map, (dir / "map.map").string());
  const nlohmann::json meta{{"id", d.id},
                            {"seed", spec.seed},
                            {"epsilon", spec.noise.epsilon},
                            {"delta", spec.noise.delta},
                            {"goals", spec.n_goals},
                            {"max_obs", spec.max_obs},
                            {"start", cell_json(d.placement.start)},
                            {"goal_cells", [&] {
                               nlohmann::json g = nlohmann::json::array();
                               for (auto c : d.placement.goals) g.push_back(cell_json(c));
                               return g;
                             }()}};
  detail::write_text_file(dir / "meta.json", meta.dump(2) + "\n");
  for (auto [name, set] : {std::pair{"train.jsonl", &d.train}, std::pair{"test.jsonl", &d.test}}) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    write_jsonl(*set, out);
  }
}

/// Loads a generated map directory. `spec.seed` and `spec.max_obs` are set
/// from its meta.json so later stages reuse the generation settings.
inline NavMapData load_nav_map_data(const std::filesystem::path& dir, ExperimentSpec& spec) {
  const auto meta = detail::read_json_file(dir / "meta.json");
  std::string id;
  Placement placement;
  try {
    id = meta.at("id").get<std::string>();
    spec.seed = meta.at("seed").get<std::uint64_t>();
    spec.max_obs = meta.at("max_obs").get<std::size_t>();
    spec.n_goals = meta.at("goals").get<std::size_t>();
    placement.start = cell_from_json(meta.at("start"));
    for (const auto& g : meta.at("goal_cells")) placement.goals.push_back(cell_from_json(g));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "meta.json").string() + ": " + e.what(), 0);
  }
  NavMapData d{std::move(id), load_movingai((dir / "map.map").string()), std::move(placement), {}, {}};
  for (auto [name, set] : {std::pair{"train.jsonl", &d.train}, std::pair{"test.jsonl", &d.test}}) {
    std::ifstream in(dir / name);
    if (!in) throw Error("cannot read " + (dir / name).string());
    *set = read_jsonl(in);
  }
  return d;
}

/// Map directories under `root` (those holding meta.json), sorted by name.
inline std::vector<std::filesystem::path> list_nav_maps(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw Error("not a directory: " + root.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_directory() && std::filesystem::exists(e.path() / "meta.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error("no generated maps under " + root.string());
  return dirs;
}

inline void save_cost_fields_stage(const NavMapData& d, const std::filesystem::path& dir) {
  const auto t0 = detail::Clock::now();
  const auto fields = build_cost_fields(d.map, d.placement.goals);
  const double s = detail::seconds_since(t0);
  detail::write_text_file(dir / "costmaps.json", cost_fields_to_json(fields, d.map.width()).dump() + "\n");
  detail::update_offline(dir, "MS", s);
}

inline void save_model_stage(const NavMapData& d, const ExperimentSpec& spec, const std::filesystem::path& dir) {
  const auto t0 = detail::Clock::now();
  const auto model = train_nav_fc(d, spec);
  const double s = detail::seconds_since(t0);
  save_mlp(model, (dir / "model.json").string());
  detail::update_offline(dir, "FC", s);
}

/// Whatever offline artifacts exist in `dir`.
inline NavArtifacts load_nav_artifacts(const std::filesystem::path& dir) {
  NavArtifacts a;
  nlohmann::json offline = nlohmann::json::object();
  if (std::filesystem::exists(dir / "offline.json")) offline = detail::read_json_file(dir / "offline.json");
  if (std::filesystem::exists(dir / "model.json")) {
    a.fc = load_mlp((dir / "model.json").string());
    a.fc_offline_s = offline.value("FC", 0.0);
  }
  if (std::filesystem::exists(dir / "costmaps.json")) {
    a.fields = cost_fields_from_json(detail::read_json_file(dir / "costmaps.json"));
    a.ms_offline_s = offline.value("MS", 0.0);
  }
  return a;
}

/// Evaluates every generated map under `root` with the artifacts found on disk.
inline RunOutput evaluate_workspace(const std::filesystem::path& root, const ExperimentSpec& base) {
  base.validate(true);
  RunOutput out;
  for (const auto& dir : list_nav_maps(root)) {
    ExperimentSpec spec = base;
    const auto d = load_nav_map_data(dir, spec);
    evaluate_nav_map(d, load_nav_artifacts(dir), spec, out);
  }
  auto avg = average_rows(out.rows);
  out.rows.insert(out.rows.end(), avg.begin(), avg.end());
  sort_rows(out.rows);
  return out;
}

// ---- Task domains -------------------------------------------------------------

struct TaskSpec {
  double epsilon = 0.25;
  double delta = 2.0;
};

/// FC versus RG on generated task problems for each domain directory.
inline RunOutput run_tasks(const ExperimentSpec& spec, const std::vector<std::filesystem::path>& domain_dirs,
                           const TaskSpec& task = {}) {
  spec.validate(false);
  if (domain_dirs.empty()) throw InvalidArgument("no task domains given");
  RunOutput out;
  for (const auto& dir : domain_dirs) {
    const auto td = load_task_domain(dir);
    const auto seed = mix_seed(spec.seed, detail::stream_of(td.id));
    const auto problems =
        generate_task_problems(td.strips, td.id, td.goals, spec.n_paths, task.epsilon, task.delta, seed);
    auto [train_set, test] = split(problems, spec.train_ratio, mix_seed(seed, 0x5B117));

    for (Method m : spec.methods) {
      detail::Scored s;
      double offline = 0.0;
      std::optional<MlpModel> model;
      std::optional<OneHotVocab> vocab;
      std::size_t max_len = 0;
      if (m == Method::kFC) {
        const auto t0 = detail::Clock::now();
        vocab = OneHotVocab::from(*td.strips);
        for (const auto& p : problems) max_len = std::max(max_len, p.observations.size());
        std::vector<EncodedExample> data;
        for (const auto& p : train_set)
          for (auto& e : encode_task(p, *vocab, max_len, true)) data.push_back(std::move(e));
        const auto fc_seed = mix_seed(seed, 0xFC);
        model = init_mlp({max_len * vocab->width(), 256, 32, td.goals.size()}, fc_seed, spec.drop_rate);
        TrainConfig cfg;
        cfg.epochs = spec.epochs;
        cfg.batch_size = spec.batch_size;
        cfg.seed = fc_seed;
        train(*model, data, cfg);
        offline = detail::seconds_since(t0);
      }
      for (const auto& p : test) {
        const auto t0 = detail::Clock::now();
        std::optional<Posterior> post;
        if (m == Method::kFC) {
          post = forward(*model, encode_task(p, *vocab, max_len, false).front().features);
        } else {
          try {
            post = predict_rg(*td.strips, td.goals, p.observations, spec.recognizer,
                              SearchLimits::within(std::chrono::duration<double>(spec.rg_timeout_s)));
          } catch (const SearchTimeout&) {
          }
        }
        s.online_us.push_back(1e6 * detail::seconds_since(t0));
        s.posteriors.push_back(std::move(post));
      }
      detail::score_rows(td.id, "-", m, test, s, offline, mix_seed(seed, static_cast<std::uint64_t>(m)), out);
    }
  }
  sort_rows(out.rows);
  return out;
}

// ---- Output -------------------------------------------------------------------

inline std::string format_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

/// Result CSV. Timing columns are measured wall-clock values and would break
/// byte-identical reruns, so they are written as 0 unless `with_times`.
inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out, bool with_times = false) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.domain << ',' << r.map << ',' << r.method << ',' << r.truncation << ','
        << (r.timeouts ? std::string("NA") : format_number(r.accuracy, 6)) << ',' << r.n << ','
        << (with_times ? format_number(r.offline_s, 6) : "0") << ','
        << (with_times ? format_number(r.online_us, 3) : "0") << '\n';
  }
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("unexpected results header", 1);
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw ParseError("expected 8 columns", lineno);
    try {
      ResultRow r;
      r.domain = f[0];
      r.map = f[1];
      r.method = f[2];
      r.truncation = std::stoi(f[3]);
      if (f[4] == "NA") r.timeouts = 1;
      else r.accuracy = std::stod(f[4]);
      r.n = std::stoul(f[5]);
      r.offline_s = std::stod(f[6]);
      r.online_us = std::stod(f[7]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", lineno);
    }
  }
  return rows;
}

inline void write_predictions_csv(const std::vector<PredictionRecord>& preds, std::ostream& out) {
  out << "domain,map,method,truncation,problem,path_id,true_goal,predicted\n";
  for (const auto& p : preds)
    out << p.domain << ',' << p.map << ',' << p.method << ',' << p.truncation << ',' << p.problem << ','
        << p.path_id << ',' << p.true_goal << ',' << (p.predicted ? std::to_string(*p.predicted) : "timeout") << '\n';
}

struct TimingReport {
  std::string table;
  std::string csv;
};

/// Mean offline and online time per method over per-map rows.
inline TimingReport timing_report(const std::vector<ResultRow>& rows) {
  struct Acc {
    double off = 0, on = 0;
    std::size_t n = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> by;
  for (const auto& r : rows) {
    if (r.map == kAverageMap) continue;
    auto& a = by[{r.domain, r.method}];
    a.off += r.offline_s;
    a.on += r.online_us;
    ++a.n;
  }
  TimingReport rep;
  if (by.empty()) return rep;
  std::ostringstream table, csv;
  csv << "domain,method,offline_s,online_us\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %-6s %14s %14s\n", "domain", "method", "offline_s", "online_us");
  table << line;
  for (const auto& [k, a] : by) {
    const double off = a.off / static_cast<double>(a.n), on = a.on / static_cast<double>(a.n);
    std::snprintf(line, sizeof line, "%-16s %-6s %14.4f %14.2f\n", k.first.c_str(), k.second.c_str(), off, on);
    table << line;
    csv << k.first << ',' << k.second << ',' << format_number(off, 6) << ',' << format_number(on, 3) << '\n';
  }
  rep.table = table.str();
  rep.csv = csv.str();
  return rep;
}

/// Accuracy-versus-truncation chart, one polyline per method.
inline std::string render_svg(const std::string& title, const std::map<std::string, std::map<int, double>>& series) {
  constexpr int W = 480, H = 320, L = 60, R = 110, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](int trunc) { return L + (trunc - 25) / 75.0 * pw; };
  auto py = [&](double acc) { return T + (1.0 - acc) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  for (int t : kTruncations)
    s << "<text x=\"" << px(t) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << t << "%</text>\n";
  for (int k = 0; k <= 4; ++k)
    s << "<text x=\"" << L - 8 << "\" y=\"" << py(k / 4.0) + 4 << "\" text-anchor=\"end\">" << format_number(k / 4.0, 2)
      << "</text>\n";
  s << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">observations retained</text>\n";
  std::size_t ci = 0;
  for (const auto& [method, pts] : series) {
    const char* c = colors[ci % std::size(colors)];
    s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [t, acc] : pts) {
      s << (first ? "" : " ") << format_number(px(t), 1) << ',' << format_number(py(acc), 1);
      first = false;
    }
    s << "\"/>\n";
    s << "<text x=\"" << L + pw + 10 << "\" y=\"" << T + 16 * ci + 10 << "\" fill=\"" << c << "\">" << method << "</text>\n";
    ++ci;
  }
  s << "</svg>\n";
  return s.str();
}

/// Writes fig_<domain>.csv and fig_<domain>.svg per domain. Navigation
/// domains plot the cross-map averages when present.
inline std::vector<std::filesystem::path> emit_plots(const std::vector<ResultRow>& rows,
                                                     const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw Error("cannot create output directory: " + out_dir.string());
  std::map<std::string, std::vector<ResultRow>> by_domain;
  for (const auto& r : rows) by_domain[r.domain].push_back(r);
  std::vector<std::filesystem::path> written;
  for (auto& [domain, drows] : by_domain) {
    const bool has_avg = std::any_of(drows.begin(), drows.end(), [](const ResultRow& r) { return r.map == kAverageMap; });
    std::vector<ResultRow> plotted;
    for (const auto& r : drows)
      if (!has_avg || r.map == kAverageMap) plotted.push_back(r);
    if (!has_avg) {
      // several maps without averages: average them here
      std::set<std::string> maps;
      for (const auto& r : plotted) maps.insert(r.map);
      if (maps.size() > 1) plotted = average_rows(plotted);
    }
    std::map<std::string, std::map<int, double>> series;
    for (const auto& r : plotted)
      if (!r.timeouts) series[r.method][r.truncation] = r.accuracy;

    const auto csv_path = out_dir / ("fig_" + domain + ".csv");
    const auto svg_path = out_dir / ("fig_" + domain + ".svg");
    std::ofstream csv(csv_path);
    if (!csv) throw Error("cannot write " + csv_path.string());
    write_results_csv(plotted, csv);
    std::ofstream svg(svg_path);
    if (!svg) throw Error("cannot write " + svg_path.string());
    svg << render_svg(domain + ": accuracy by observations retained", series);
    written.push_back(csv_path);
    written.push_back(svg_path);
  }
  return written;
}

}  // namespace goalrec

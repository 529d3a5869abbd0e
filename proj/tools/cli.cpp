#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/checkpoint.hpp"
#include "gridres/config.hpp"
#include "gridres/csv.hpp"
#include "gridres/dataset.hpp"
#include "gridres/error.hpp"
#include "gridres/evaluation.hpp"
#include "gridres/ingest.hpp"
#include "gridres/planning.hpp"
#include "gridres/simulation.hpp"
#include "gridres/topology.hpp"
#include "gridres/training.hpp"

namespace gridres::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTopologyStream = 0x70B0;
constexpr std::uint64_t kTrainStream = 0x7A1E;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir = ".";
};

RunConfig effective_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  c.validate();
  return c;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", path.string()));
  return f;
}

/// Emits a line at every 10% boundary crossed.
class Progress {
 public:
  Progress(std::ostream& err, std::string what, int total) : err_(err), what_(std::move(what)), total_(total) {}
  void update(int done) {
    const int decile = total_ > 0 ? done * 10 / total_ : 10;
    while (last_ < decile) {
      ++last_;
      err_ << fmt::format("progress: {}% ({}/{} {})\n", last_ * 10, done, total_, what_);
    }
  }

 private:
  std::ostream& err_;
  std::string what_;
  int total_;
  int last_ = 0;
};

std::vector<EventRecord> load_records(const std::string& weather, const std::string& labels) {
  auto records = parse_weather_table(csv::read_file(weather));
  if (!labels.empty()) attach_labels(records, csv::read_file(labels));
  if (records.empty()) throw Error(ErrorCode::empty_input, fmt::format("{}: no weather events", weather));
  return records;
}

/// Rows keyed by system (`system_id` or `area_id`) with one numeric column.
std::map<std::string, double> load_keyed_column(const std::string& path, const std::string& column) {
  const auto table = csv::read_file(path);
  auto key = table.find_column("system_id");
  if (!key) key = table.find_column("area_id");
  if (!key) throw Error(ErrorCode::parse_error, fmt::format("{}: missing column 'system_id' or 'area_id'", path));
  const std::size_t col = table.column(column);
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r][col].empty()) continue;
    if (!out.emplace(table.rows[r][*key], csv::to_double(table, r, col)).second) csv::fail(table, r, "duplicate system");
  }
  return out;
}

WeightScheme scheme_from_name(const std::string& name, const WeightScheme& configured) {
  if (name.empty()) return configured;
  if (name == "plain") return PlainSum{};
  if (name == "group") return vulnerable_group_emphasis();
  if (name == "concentration") return ConcentrationPenalty{};
  throw Error(ErrorCode::config_error, fmt::format("--scheme: unknown scheme '{}'", name));
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string outages;
  std::string population;
};

int cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out) {
  const RunConfig config = effective_config(g);
  const auto raw = ingest::parse_outage_table(csv::read_file(a.outages));
  const auto population = ingest::parse_population_table(csv::read_file(a.population));
  const auto result = ingest::run_pipeline(raw, population, config.ingest);

  auto events = open_out(out_path(g, "events.csv"));
  ingest::write_events_csv(events, result.events);
  auto scores = open_out(out_path(g, "scores.csv"));
  ingest::write_scores_csv(scores, result.scores);

  std::size_t n_events = 0;
  for (const auto& [id, list] : result.events) n_events += list.size();
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s.empty() ? std::string("-") : s;
  };
  out << fmt::format("systems: {}\nkept systems: {}\nevents: {}\ndropped systems: {}\nexcluded systems: {}\n",
                     result.systems_seen, result.events.size(), n_events, join(result.dropped_systems),
                     join(result.excluded_systems));
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::optional<int> episodes;
  std::uint64_t first_episode = 0;
  bool traces = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = effective_config(g);
  if (a.episodes) config.simulation.episodes = *a.episodes;
  config.validate();
  out << "seed: " << config.seed << '\n';

  const GridTopology topology = generate_topology(config.topology, RngStream(config.seed, kTopologyStream));
  Progress progress(err, "episodes", config.simulation.episodes);
  MonteCarloOptions mc;
  mc.n_episodes = config.simulation.episodes;
  mc.seed = config.seed;
  mc.first_episode = a.first_episode;
  mc.workers = config.workers;
  mc.keep_traces = a.traces;
  mc.progress = [&](int done, int) { progress.update(done); };
  const auto result = run_monte_carlo(topology, config.simulation.episode, mc);

  auto topo = open_out(out_path(g, "topology.json"));
  topo << topology.to_json().dump(2) << '\n';
  auto weather = open_out(out_path(g, "weather.csv"));
  write_weather_csv(weather, result.dataset);
  auto labels = open_out(out_path(g, "labels.csv"));
  write_labels_csv(labels, result.dataset);
  auto summary = open_out(out_path(g, "area_summary.csv"));
  write_area_summary_csv(summary, result.areas);
  if (a.traces) {
    json all = json::array();
    for (const auto& t : result.traces) all.push_back(t.to_json());
    auto tr = open_out(out_path(g, "traces.json"));
    tr << all.dump() << '\n';
  }
  out << fmt::format("areas: {}\nlines: {}\ncustomers: {}\nepisodes: {}\ngust samples: {}\n",
                     topology.service_areas().size(), topology.lines().size(), topology.total_customers(),
                     config.simulation.episodes, result.dataset.samples.size());
  out << "area_id,mean_rs_event,mean_rs_outage\n";
  for (const auto& s : result.areas) {
    out << fmt::format("{},{},{}\n", s.area_id, csv::format_report(s.mean_rs_event), csv::format_report(s.mean_rs_outage));
  }
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string weather;
  std::string labels;
  std::string protocol;
  std::optional<int> epochs;
  bool grid_search = false;
};

void write_losses(const fs::path& path, const std::vector<double>& train, const std::vector<double>& val) {
  auto f = open_out(path);
  f << "epoch,train_mae,val_mae\n";
  for (std::size_t e = 0; e < train.size(); ++e) {
    f << e + 1 << ',' << csv::format_double(train[e]) << ',' << csv::format_double(val[e]) << '\n';
  }
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = effective_config(g);
  if (a.epochs) config.surrogate.epochs = *a.epochs;
  if (a.protocol == "kfold") {
    config.training.protocol = TrainProtocol::kfold;
  } else if (a.protocol == "stratified") {
    config.training.protocol = TrainProtocol::stratified;
  } else if (!a.protocol.empty()) {
    throw Error(ErrorCode::config_error, fmt::format("--protocol: unknown protocol '{}'", a.protocol));
  }
  out << "seed: " << config.seed << '\n';

  const auto records = load_records(a.weather, a.labels);
  const bool te = config.training.time_embedding;
  SurrogateConfig sc = config.surrogate;
  sc.input_dim = model_input_dim(records, te);
  const auto systems = system_ids(records);
  sc.n_systems = static_cast<int>(systems.size());
  try {
    sc.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, fmt::format("surrogate: {}", e.what()));
  }

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < systems.size(); ++i) index[systems[i]] = static_cast<int>(i);
  std::vector<int> groups;
  for (const auto& r : records) groups.push_back(index[r.system_id]);

  auto make_model = [&](const Split& split, std::uint64_t fold) {
    return SurrogateModel::initialize(sc, systems, fit_scaler(records, split.train),
                                      RngStream(config.seed, kTrainStream).derive(fold).next_u64(), te);
  };
  auto train_split = [&](const Split& split, std::uint64_t fold, const std::string& label) {
    SurrogateModel model = make_model(split, fold);
    const auto tr = build_samples(model, records, split.train);
    const auto va = build_samples(model, records, split.val);
    Progress progress(err, label, sc.epochs);
    TrainOptions opts;
    opts.seed = RngStream(config.seed, kTrainStream).derive(fold, 1).next_u64();
    opts.workers = config.workers;
    opts.progress = [&](int epoch, int, double, double) { progress.update(epoch); };
    return train(tr, va, std::move(model), opts);
  };

  if (a.grid_search) {
    const Split split = config.training.protocol == TrainProtocol::kfold
                            ? kfold_split(records.size(), config.training.folds, config.seed).front()
                            : stratified_split(groups, config.training.fractions, config.seed);
    const SurrogateModel proto = make_model(split, 0);
    const auto tr = build_samples(proto, records, split.train);
    const auto va = build_samples(proto, records, split.val);
    TrainOptions opts;
    opts.seed = config.seed;
    opts.workers = config.workers;
    const auto result = grid_search(tr, va, proto, config.training.grid, opts);
    auto f = open_out(out_path(g, "grid_search.csv"));
    f << "trial,gru_hidden,gru_layers,mlp_layers,learning_rate,weight_decay,mlp_dropout,best_val_mae\n";
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
      const auto& c = result.trials[i].config;
      f << fmt::format("{},{},{},{},{},{},{},{}\n", i, c.gru_hidden, c.gru_layers, c.mlp_layers,
                       csv::format_double(c.learning_rate), csv::format_double(c.weight_decay),
                       csv::format_double(c.mlp_dropout), csv::format_double(result.trials[i].best_val));
    }
    out << fmt::format("trials: {}\nbest trial: {}\nbest val mae: {}\n", result.trials.size(), result.best,
                       csv::format_report(result.trials[result.best].best_val));
    return 0;
  }

  if (config.training.protocol == TrainProtocol::stratified) {
    const Split split = stratified_split(groups, config.training.fractions, config.seed);
    const auto result = train_split(split, 0, "epochs");
    save_checkpoint(result.best, out_path(g, "model.json").string());
    write_losses(out_path(g, "losses.csv"), result.train_loss, result.val_loss);
    const auto te_samples = build_samples(result.best, records, split.test);
    const double test_mae = evaluate_mae(result.best, te_samples);
    out << fmt::format("samples: {} train, {} val, {} test\nbest epoch: {}\nbest val mae: {}\ntest mae: {}\n",
                       split.train.size(), split.val.size(), split.test.size(), result.best_epoch,
                       csv::format_report(result.best_val), csv::format_report(test_mae));
    return 0;
  }

  const auto folds = kfold_split(records.size(), config.training.folds, config.seed);
  std::vector<double> mean_train(static_cast<std::size_t>(sc.epochs), 0.0);
  std::vector<double> mean_val(mean_train.size(), 0.0);
  double mean_best = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto result = train_split(folds[f], f, fmt::format("epochs, fold {}", f + 1));
    save_checkpoint(result.best, out_path(g, fmt::format("model_fold{}.json", f + 1)).string());
    for (std::size_t e = 0; e < mean_train.size(); ++e) {
      mean_train[e] += result.train_loss[e] / static_cast<double>(folds.size());
      mean_val[e] += result.val_loss[e] / static_cast<double>(folds.size());
    }
    mean_best += result.best_val / static_cast<double>(folds.size());
    out << fmt::format("fold {}: best epoch {}, best val mae {}\n", f + 1, result.best_epoch,
                       csv::format_report(result.best_val));
  }
  write_losses(out_path(g, "losses.csv"), mean_train, mean_val);
  out << fmt::format("mean best val mae: {}\n", csv::format_report(mean_best));
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string checkpoint;
  std::string benchmark;
  std::string profiles;
  std::string scheme;
  std::string ground_truth;
  std::string truth_column = "rs";
  std::string customers;
};

ProfileTable profiles_or_zero(const std::string& path, const std::vector<std::string>& systems, double lambda) {
  if (!path.empty()) return parse_profiles(csv::read_file(path), lambda);
  ProfileTable t;
  for (const auto& s : systems) {
    VulnerabilityProfile p;
    p.system_id = s;
    p.lambda = lambda;
    t[s] = p;
  }
  return t;
}

int cmd_evaluate(const Globals& g, const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig config = effective_config(g);
  out << "seed: " << config.seed << '\n';
  const SurrogateModel model = load_checkpoint(a.checkpoint);
  BenchmarkSet bench;
  bench.events = load_records(a.benchmark, "");
  bench.provenance = a.benchmark;
  EvaluationStats stats;
  const auto evals = evaluate_benchmark(model, model.systems(), bench, &stats);
  if (stats.clamped_values > 0) {
    err << fmt::format("warning: {} benchmark feature values outside the training range were clamped\n",
                       stats.clamped_values);
  }
  const auto profiles = profiles_or_zero(a.profiles, model.systems(), config.metrics.lambda);
  const WeightScheme scheme = scheme_from_name(a.scheme, config.metrics.scheme);
  const PermutationOptions perm{config.metrics.permutation_iterations, config.seed};
  ResilienceReport report = rank_systems(evals, profiles, scheme, perm);
  if (!a.customers.empty()) {
    const auto customers = load_keyed_column(a.customers, "customers");
    for (auto& row : report.rows) {
      auto it = customers.find(row.system_id);
      if (it == customers.end()) continue;
      PlanningInput in{row.scores, config.planning.pu, it->second, config.planning.target};
      row.der_watts = plan_der_unweighted(in, config.planning.mode);
    }
  }
  if (!a.ground_truth.empty()) correlate_with_truth(report, load_keyed_column(a.ground_truth, a.truth_column), perm);

  auto csv_out = open_out(out_path(g, "report.csv"));
  write_report_csv(csv_out, report);
  auto json_out = open_out(out_path(g, "report.json"));
  json_out << report_to_json(report).dump(2) << '\n';

  out << fmt::format("systems: {}\nbenchmark events: {}\nscheme: {}\n", report.rows.size(), bench.events.size(),
                     report.scheme);
  if (report.ru_rw_correlation) {
    out << fmt::format("spearman ru/rw: rho={} p={}\n", csv::format_report(report.ru_rw_correlation->rho),
                       csv::format_report(report.ru_rw_correlation->p_value));
  }
  if (!a.ground_truth.empty()) {
    if (report.truth_correlation) {
      out << fmt::format("spearman truth/ru: rho={} p={}\n", csv::format_report(report.truth_correlation->rho),
                         csv::format_report(report.truth_correlation->p_value));
    } else {
      out << "spearman truth/ru: undefined\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------- plan

struct PlanArgs {
  std::string report;
  std::string scores;
  std::string customers;
  std::string profiles;
  std::optional<double> target;
  std::optional<double> pu;
  std::string mode;
  std::string scheme;
};

int cmd_plan(const Globals& g, const PlanArgs& a, std::ostream& out) {
  const RunConfig config = effective_config(g);
  if (a.report.empty() == a.scores.empty()) {
    throw Error(ErrorCode::config_error, "plan: exactly one of --report or --scores is required");
  }
  const double target = a.target.value_or(config.planning.target);
  const double pu = a.pu.value_or(config.planning.pu);
  const PlanningMode mode = a.mode.empty() ? config.planning.mode : planning_mode_from_string(a.mode);
  if (!(target > 0.0 && target <= 1.0)) {
    throw Error(ErrorCode::infeasible_target, fmt::format("plan: target {} outside (0, 1]", target));
  }

  std::map<std::string, std::vector<double>> scores;
  if (!a.report.empty()) {
    std::ifstream in(a.report, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot read '{}'", a.report));
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, fmt::format("{}: {}", a.report, e.what()));
    }
    for (const auto& row : report_from_json(doc).rows) scores[row.system_id] = row.scores;
  } else {
    const auto table = csv::read_file(a.scores);
    auto key = table.find_column("system_id");
    if (!key) key = table.find_column("area_id");
    if (!key) throw Error(ErrorCode::parse_error, fmt::format("{}: missing column 'system_id' or 'area_id'", a.scores));
    const std::size_t col = table.column("rs");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      scores[table.rows[r][*key]].push_back(csv::to_double(table, r, col));
    }
  }
  const auto customers = load_keyed_column(a.customers, "customers");
  std::vector<std::string> systems;
  for (const auto& [id, s] : scores) systems.push_back(id);
  const ProfileTable profiles =
      a.profiles.empty() ? ProfileTable{} : parse_profiles(csv::read_file(a.profiles), config.metrics.lambda);
  const WeightScheme scheme = scheme_from_name(a.scheme, config.metrics.scheme);

  auto f = open_out(out_path(g, "plan.csv"));
  f << "system_id,customers,ru,target,der_watts_unweighted,rw,der_watts_weighted,saturated_events\n";
  std::size_t saturated_total = 0;
  for (const auto& id : systems) {
    auto c = customers.find(id);
    if (c == customers.end()) throw Error(ErrorCode::unknown_system, fmt::format("no customer count for '{}'", id));
    const PlanningInput in{scores[id], pu, c->second, target};
    const double watts = plan_der_unweighted(in, mode);
    const double ru = unweighted_resilience(std::span<const double>(in.scores)).value();
    std::string rw, weighted;
    if (!profiles.empty()) {
      auto p = profiles.find(id);
      if (p == profiles.end()) throw Error(ErrorCode::missing_profile, fmt::format("no vulnerability profile for '{}'", id));
      rw = csv::format_report(weighted_resilience(ResilienceScore(ru), p->second, scheme).value());
      weighted = csv::format_report(plan_der_weighted(in, p->second, scheme, mode));
    }
    const std::size_t saturated = mode == PlanningMode::analytic ? saturated_events(in, watts) : 0;
    saturated_total += saturated;
    f << fmt::format("{},{},{},{},{},{},{},{}\n", id, csv::format_double(c->second), csv::format_report(ru),
                     csv::format_double(target), csv::format_report(watts), rw, weighted, saturated);
  }
  out << fmt::format("systems: {}\ntarget: {}\nmode: {}\n", systems.size(), csv::format_double(target), to_string(mode));
  if (saturated_total > 0) {
    out << fmt::format("note: {} event scores exceed 1 after augmentation; use --mode capped to saturate them\n",
                       saturated_total);
  }
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::config_error:
    case ErrorCode::schema_mismatch:
      return 2;
    default:
      return 1;
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Power-system resilience workbench", "gridres"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Output directory");

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Extract outage events and per-event resilience");
  ingest->add_option("--outages", ia.outages, "timestamp_utc,system_id,customers_out")->required();
  ingest->add_option("--population", ia.population, "system_id,year,population")->required();

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo storm and restoration episodes");
  simulate->add_option("--episodes", sa.episodes, "Override simulation.episodes");
  simulate->add_option("--first-episode", sa.first_episode, "Id of the first episode");
  simulate->add_flag("--traces", sa.traces, "Write every episode trace to traces.json");

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "Train the surrogate");
  trainc->add_option("--weather", ta.weather, "Weather CSV")->required();
  trainc->add_option("--labels", ta.labels, "Label or score CSV with an rs column")->required();
  trainc->add_option("--protocol", ta.protocol, "stratified or kfold");
  trainc->add_option("--epochs", ta.epochs, "Override surrogate.epochs");
  trainc->add_flag("--grid-search", ta.grid_search, "Sweep training.grid");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score systems against a benchmark");
  evaluate->add_option("--checkpoint", ea.checkpoint, "Model checkpoint")->required();
  evaluate->add_option("--benchmark", ea.benchmark, "Benchmark weather CSV")->required();
  evaluate->add_option("--profiles", ea.profiles, "system_id,f01..f15");
  evaluate->add_option("--scheme", ea.scheme, "plain, group or concentration");
  evaluate->add_option("--ground-truth", ea.ground_truth, "CSV of reference resilience per system");
  evaluate->add_option("--truth-column", ea.truth_column, "Column of the ground-truth CSV");
  evaluate->add_option("--customers", ea.customers, "CSV with a customers column, for der_watts");

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Size DER capacity for a resilience target");
  plan->add_option("--report", pa.report, "report.json from evaluate");
  plan->add_option("--scores", pa.scores, "Per-event score CSV with an rs column");
  plan->add_option("--customers", pa.customers, "CSV with a customers column")->required();
  plan->add_option("--profiles", pa.profiles, "system_id,f01..f15");
  plan->add_option("--target", pa.target, "Resilience target");
  plan->add_option("--pu", pa.pu, "Watts per customer");
  plan->add_option("--mode", pa.mode, "analytic or capped");
  plan->add_option("--scheme", pa.scheme, "plain, group or concentration");

  auto* dump = app.add_subcommand("dump-config", "Print the effective configuration");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: code=usage msg=" << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(g, ia, out);
    if (*simulate) return cmd_simulate(g, sa, out, err);
    if (*trainc) return cmd_train(g, ta, out, err);
    if (*evaluate) return cmd_evaluate(g, ea, out, err);
    if (*plan) return cmd_plan(g, pa, out);
    if (*dump) {
      out << dump_run_config(effective_config(g));
      return 0;
    }
  } catch (const Error& e) {
    err << "error: code=" << to_string(e.code()) << " msg=" << one_line(e.what()) << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: code=io_error msg=" << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: code=internal msg=" << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gridres::cli

// Prints one PASS/FAIL line per acceptance criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "gridres/config.hpp"
#include "gridres/csv.hpp"
#include "gridres/error.hpp"
#include "gridres/fragility.hpp"
#include "gridres/ingest.hpp"
#include "gridres/metrics.hpp"
#include "gridres/numerics.hpp"
#include "gridres/planning.hpp"
#include "gridres/surrogate.hpp"
#include "gridres/topology.hpp"
#include "oracles.hpp"

using namespace gridres;
namespace fs = std::filesystem;

namespace {

constexpr double kExact = 1e-12;
constexpr double kCrit1Seconds = 5.0;
constexpr double kCrit2Seconds = 30.0;
constexpr double kCrit3Seconds = 60.0;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEps = 1e-4;
constexpr double kStandardErrors = 3.0;
constexpr int kFragilityDraws = 100'000;
constexpr double kMinSpearman = 0.7;
constexpr double kMaxHeldOutMae = 0.05;
constexpr double kCrit5Seconds = 600.0;
constexpr double kAnalyticTolerance = 1e-9;
constexpr double kCappedTolerance = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects the first failed check; later checks still run for the detail.
struct Checker {
  int failures = 0;
  std::string first;
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ == 0) first = what;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ------------------------------------------------------------------ 1

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  Checker c;
  c.expect(std::abs(trapezoid_resilience(std::vector<double>{1.0, 0.5, 0.5, 1.0}).value() - 2.0 / 3.0) <= kExact,
           "trapezoid example");
  c.expect(std::abs(unweighted_resilience(std::vector<double>{0.8, 0.6, 0.7}).value() - 0.7) <= kExact,
           "unweighted example");
  VulnerabilityProfile three;
  three.factors[0] = three.factors[1] = three.factors[2] = 1.0;
  c.expect(std::abs(weighted_resilience(ResilienceScore(0.81), three, PlainSum{}).value() - 0.6561) <= kExact,
           "weighted example");
  VulnerabilityProfile conc;
  conc.factors[0] = 0.25;
  conc.factors[1] = 0.1;
  c.expect(std::abs(weighted_resilience(ResilienceScore(0.81), conc, ConcentrationPenalty{0.2, 3.0}).value() -
                    std::pow(0.81, 1.0 + 0.85 / 3.0)) <= kExact,
           "concentration example");
  const PermutationOptions none{0, 0};
  const double tied = spearman_rho(std::vector<double>{1, 2, 2, 4}, std::vector<double>{1, 3, 2, 4}, none).rho;
  c.expect(std::abs(tied - 3.0 / std::sqrt(10.0)) <= kExact, "spearman example");

  RngStream rng(2024, 1);
  const int cases = 1000;
  for (int i = 0; i < cases; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 40));
    const double level = rng.uniform();
    c.expect(std::abs(trapezoid_resilience(std::vector<double>(n, level)).value() - level) <= kExact, "constant curve");

    std::vector<double> curve(n);
    for (double& v : curve) v = rng.uniform();
    c.expect(std::abs(trapezoid_resilience(curve).value() - oracle::trapezoid(curve)) <= kExact, "trapezoid oracle");

    const double ru = rng.uniform();
    VulnerabilityProfile p;
    for (double& f : p.factors) f = rng.bernoulli(0.3) ? 0.0 : rng.uniform();
    const double rw = weighted_resilience(ResilienceScore(ru), p, PlainSum{}).value();
    c.expect(rw <= ru + kExact, "weighted <= unweighted");
    const double sum = std::accumulate(p.factors.begin(), p.factors.end(), 0.0);
    c.expect(std::abs(rw - std::pow(ru, 1.0 + p.lambda * sum)) <= kExact, "weighted formula");

    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = std::floor(rng.uniform(0, 8));
      y[k] = std::floor(rng.uniform(0, 8));
    }
    if (n < 3 || std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
      continue;
    }
    const double rho = spearman_rho(x, y, none).rho;
    c.expect(std::abs(rho - oracle::spearman(x, y)) <= kExact, "spearman oracle");
    std::vector<double> mx(n), my(n);
    for (std::size_t k = 0; k < n; ++k) {
      mx[k] = std::exp(x[k]) * 3.0 - 1.0;
      my[k] = y[k] * y[k] * y[k];
    }
    c.expect(std::abs(spearman_rho(mx, my, none).rho - rho) <= kExact, "rank invariance");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < kCrit1Seconds, "runtime");
  return {c.failures == 0,
          fmt::format("{} cases, {:.2f} s{}", cases, secs, c.failures ? ", first failure: " + c.first : "")};
}

// ------------------------------------------------------------------ 2

Outcome connectivity_oracle() {
  const auto t0 = Clock::now();
  Checker c;
  RngStream rng(77, 2);
  const int topologies = 100;
  std::size_t lines_checked = 0;
  for (int trial = 0; trial < topologies; ++trial) {
    TopologyGenConfig cfg;
    cfg.n_service_areas = static_cast<int>(rng.uniform_int(1, 4));
    const int cap = 200 / cfg.n_service_areas;
    const int lo = static_cast<int>(rng.uniform_int(1, cap));
    cfg.poles_per_area = {lo, static_cast<int>(rng.uniform_int(lo, cap))};
    const int blo = static_cast<int>(rng.uniform_int(1, 150));
    cfg.buildings_per_area = {blo, blo + static_cast<int>(rng.uniform_int(0, 100))};
    cfg.neighbor_k = static_cast<int>(rng.uniform_int(1, 10));
    const auto topo = generate_topology(cfg, rng.derive(5, static_cast<std::uint64_t>(trial)));
    c.expect(topo.poles().size() <= 200, "pole cap");
    const std::size_t n = topo.lines().size();
    for (std::size_t l = 0; l < n; ++l) {
      std::vector<char> one(n, 0);
      one[l] = 1;
      c.expect(topo.line_criticality(static_cast<int>(l)) ==
                   topo.total_customers() - oracle::reachable_customers(topo, one),
               "line criticality");
      ++lines_checked;
    }
    for (int k = 0; k < 20; ++k) {
      std::vector<char> mask(n, 0);
      const double p = rng.uniform(0.0, 0.4);
      for (auto& m : mask) m = rng.bernoulli(p) ? 1 : 0;
      c.expect(topo.customers_served(mask) == oracle::reachable_customers(topo, mask), "customers served");
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < kCrit2Seconds, "runtime");
  return {c.failures == 0, fmt::format("{} topologies, {} lines, {:.2f} s{}", topologies, lines_checked, secs,
                                       c.failures ? ", first failure: " + c.first : "")};
}

// ------------------------------------------------------------------ 3

double tiny_loss(SurrogateModel m, std::span<const double> theta, const std::vector<TrainingSample>& batch) {
  std::copy(theta.begin(), theta.end(), m.parameters().begin());
  double s = 0.0;
  for (const auto& x : batch) s += std::abs(predict_normalized(m, x.sequence, x.system) - x.label);
  return s / static_cast<double>(batch.size());
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  RngStream rng(31337, 3);
  const int models = 20;
  double worst = 0.0;
  for (int trial = 0; trial < models; ++trial) {
    SurrogateConfig cfg;
    cfg.gru_hidden = static_cast<int>(rng.uniform_int(2, 5));
    cfg.gru_layers = static_cast<int>(rng.uniform_int(1, 2));
    cfg.mlp_layers = static_cast<int>(rng.uniform_int(1, 3));
    cfg.input_dim = static_cast<int>(rng.uniform_int(1, 3));
    cfg.n_systems = static_cast<int>(rng.uniform_int(1, 3));
    cfg.mlp_dropout = 0.0;
    cfg.gru_dropout = 0.0;
    std::vector<std::string> names;
    for (int s = 0; s < cfg.n_systems; ++s) names.push_back(fmt::format("s{}", s));
    auto m = SurrogateModel::initialize(cfg, names, {}, 900 + static_cast<std::uint64_t>(trial));
    for (const auto& b : m.layout().blocks) {
      if (b.cols == 1) {
        for (std::size_t i = 0; i < b.size(); ++i) m.parameters()[b.offset + i] = rng.uniform(-0.5, 0.5);
      }
    }
    std::vector<TrainingSample> batch;
    const auto steps = static_cast<std::size_t>(rng.uniform_int(1, 4));
    for (int i = 0; i < 5; ++i) {
      TrainingSample s;
      s.sequence = Sequence(steps, static_cast<std::size_t>(cfg.input_dim));
      for (double& v : s.sequence.values) v = rng.uniform();
      s.system = static_cast<int>(rng.uniform_int(0, cfg.n_systems - 1));
      s.label = rng.uniform();
      const double p = predict_normalized(m, s.sequence, s.system);
      if (std::abs(p - s.label) < 1e-3) s.label = p > 0.5 ? 0.0 : 1.0;
      batch.push_back(std::move(s));
    }
    const auto g = backward(m, batch);
    const std::vector<double> theta(m.parameters().begin(), m.parameters().end());
    const double err = finite_diff_gradcheck([&](std::span<const double> t) { return tiny_loss(m, t, batch); },
                                             theta, g.grad, kGradEps);
    worst = std::max(worst, err);
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= kGradTolerance && secs < kCrit3Seconds;
  return {ok, fmt::format("{} models, max relative error {:.2e}, {:.2f} s", models, worst, secs)};
}

// ------------------------------------------------------------------ 4

Outcome fragility_statistics() {
  TopologyGenConfig cfg;
  cfg.n_service_areas = 1;
  cfg.poles_per_area = {1, 1};
  cfg.buildings_per_area = {1, 1};
  const auto base = generate_topology(cfg, RngStream(4, 4));
  const FragilityParams params;
  RngStream rng(404, 4);
  double worst = 0.0;
  for (int pair = 0; pair < 10; ++pair) {
    const double v = rng.uniform(10.0, 60.0);
    const double cover = rng.uniform();
    auto lines = base.lines();
    lines[0].tree_cover = cover;
    const GridTopology topo(base.substations(), base.poles(), lines, base.buildings(), base.service_areas());
    WindField field;
    field.rows = field.cols = 1;
    field.patch_size_km = 1000.0;
    field.origin = {-500.0, -500.0};
    field.speeds = {v};
    const std::vector<char> intact(1, 0);
    const double p = hourly_failure_probability(v, cover, params);
    int hits = 0;
    for (int i = 0; i < kFragilityDraws; ++i) {
      hits += static_cast<int>(
          sample_failures(topo, field, intact, params, RngStream(8000 + pair, static_cast<std::uint64_t>(i))).size());
    }
    const double se = std::sqrt(p * (1.0 - p) / kFragilityDraws);
    const double z = se > 0.0 ? std::abs(hits / static_cast<double>(kFragilityDraws) - p) / se : 0.0;
    worst = std::max(worst, z);
  }
  return {worst <= kStandardErrors, fmt::format("10 pairs x {} draws, max deviation {:.2f} SE", kFragilityDraws, worst)};
}

// ------------------------------------------------------------------ 5

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

RunConfig desk_scenario(std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.topology.n_service_areas = 8;
  c.topology.poles_per_area = {120, 240};
  c.topology.buildings_per_area = {180, 360};
  c.topology.neighbor_k = 16;
  c.topology.tree_cover_area_spread = 0.25;
  c.simulation.episodes = 1600;
  c.simulation.episode.fragility.wind.p_max = 0.1;
  c.simulation.episode.fragility.tree.coupling = 0.15;
  c.simulation.episode.recovery.n_teams = 3;
  c.surrogate = SurrogateConfig::case_b(18, 8);
  c.metrics.permutation_iterations = 10'000;
  return c;
}

struct ReplicationResult {
  bool ok = false;
  double rho = 0.0;
  double mae = 0.0;
  double seconds = 0.0;
  std::string error;
};

ReplicationResult replicate(std::uint64_t seed, const fs::path& dir) {
  const auto t0 = Clock::now();
  ReplicationResult r;
  fs::create_directories(dir);
  const auto config = (dir / "config.json").string();
  std::ofstream(config) << dump_run_config(desk_scenario(seed));
  const auto sim = (dir / "sim").string();
  const auto model = (dir / "model").string();
  const auto bench = (dir / "bench").string();
  const auto eval = (dir / "eval").string();

  const std::vector<std::vector<std::string>> steps{
      {"--config", config, "--out", sim, "simulate"},
      {"--config", config, "--out", model, "train", "--weather", sim + "/weather.csv", "--labels",
       sim + "/labels.csv"},
      {"--config", config, "--out", bench, "simulate", "--first-episode", "100000", "--episodes", "300"},
      {"--config", config, "--out", eval, "evaluate", "--checkpoint", model + "/model.json", "--benchmark",
       bench + "/weather.csv", "--ground-truth", sim + "/area_summary.csv", "--truth-column", "gust_mean_rs_event"},
  };
  std::string train_out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto run = cli_run(steps[i]);
    if (run.code != 0) {
      r.error = fmt::format("step {} exited {}: {}", i, run.code, run.err);
      return r;
    }
    if (i == 1) train_out = run.out;
  }
  const auto pos = train_out.find("test mae: ");
  if (pos == std::string::npos) {
    r.error = "no test mae reported";
    return r;
  }
  r.mae = std::stod(train_out.substr(pos + 10));
  std::ifstream report(eval + "/report.json");
  const auto doc = nlohmann::json::parse(report);
  if (doc.at("truth_spearman").is_null()) {
    r.error = "truth correlation undefined";
    return r;
  }
  r.rho = doc.at("truth_spearman").at("rho").get<double>();
  r.seconds = seconds_since(t0);
  r.ok = r.rho >= kMinSpearman && r.mae <= kMaxHeldOutMae && r.seconds <= kCrit5Seconds;
  return r;
}

Outcome desk_replication(const fs::path& scratch) {
  Outcome o;
  for (std::uint64_t seed : {0u, 1u}) {
    const auto r = replicate(seed, scratch / fmt::format("seed{}", seed));
    o.pass = o.pass && r.ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += r.error.empty()
                    ? fmt::format("seed {}: spearman {:.3f}, held-out mae {:.4f}, {:.1f} s", seed, r.rho, r.mae, r.seconds)
                    : fmt::format("seed {}: {}", seed, r.error);
  }
  return o;
}

// ------------------------------------------------------------------ 6

Outcome planning_round_trip() {
  Checker c;
  c.expect(std::abs(plan_der_unweighted(PlanningInput{{0.8}, 600.0, 1000.0, 0.9}) - 60000.0) <= 60000.0 * kExact,
           "60,000 W example");
  VulnerabilityProfile three;
  three.factors[0] = three.factors[1] = three.factors[2] = 1.0;
  c.expect(std::abs(plan_der_weighted(PlanningInput{{0.81}, 600.0, 100.0, 0.81}, three, PlainSum{}) - 5400.0) <=
               5400.0 * kExact,
           "5,400 W example");

  RngStream rng(66, 6);
  double worst_analytic = 0.0, worst_capped = 0.0;
  for (int i = 0; i < 100; ++i) {
    PlanningInput in;
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 40));
    for (std::size_t k = 0; k < n; ++k) in.scores.push_back(rng.uniform(0.3, 1.0));
    in.pu = rng.uniform(200.0, 1200.0);
    in.np = std::floor(rng.uniform(10.0, 10000.0));
    in.target = rng.uniform(0.9, 1.0);
    const double pa = plan_der_unweighted(in, PlanningMode::analytic);
    const double pc = plan_der_unweighted(in, PlanningMode::capped);
    const double mean = unweighted_resilience(std::span<const double>(in.scores)).value();
    if (mean >= in.target) {
      c.expect(pa == 0.0 && pc == 0.0, "no capacity when already met");
      continue;
    }
    worst_analytic = std::max(worst_analytic, std::abs(augmented_mean(in, pa, PlanningMode::analytic) - in.target));
    worst_capped = std::max(worst_capped, std::abs(augmented_mean(in, pc, PlanningMode::capped) - in.target));
  }
  c.expect(worst_analytic <= kAnalyticTolerance, "analytic round trip");
  c.expect(worst_capped <= kCappedTolerance, "capped round trip");
  return {c.failures == 0, fmt::format("100 inputs, analytic err {:.1e}, capped err {:.1e}, examples {}{}",
                                       worst_analytic, worst_capped, c.failures ? "checked" : "exact",
                                       c.failures ? ", first failure: " + c.first : "")};
}

// ------------------------------------------------------------------ 7

double fraction_to_rs(const std::vector<double>& out) {
  std::vector<double> served;
  for (double v : out) served.push_back(1.0 - v);
  return oracle::trapezoid(served);
}

Outcome ingestion_fixture() {
  constexpr std::int64_t start = 451416;
  const auto raw = ingest::parse_outage_table(csv::read_file(GRIDRES_FIXTURE_DIR "/outages_3sys.csv"));
  const auto pop = ingest::parse_population_table(csv::read_file(GRIDRES_FIXTURE_DIR "/population_3sys.csv"));
  const auto result = ingest::run_pipeline(raw, pop, ingest::IngestOptions{});

  struct Expected {
    std::string system;
    std::int64_t first, last;
    std::vector<double> out;
  };
  const double g1 = 0.3 + 0.2 / 3.0, g2 = 0.3 + 0.4 / 3.0;
  const std::vector<Expected> expected{
      {"A", 0, 7, {0.2, 0.4, 0.6, 0.4, 0.2, 0.2, 0.2, 0.2}},
      {"A", 30, 39, {0.3, 0.3, 0.3, 0.3, g1, g2, 0.5, 0.5, 0.5, 0.5}},
      {"C", 0, 5, std::vector<double>(6, 0.1)},
      {"C", 10, 15, std::vector<double>(6, 0.6)},
      {"C", 20, 25, std::vector<double>(6, 0.8)},
  };
  Checker c;
  c.expect(result.dropped_systems == std::vector<std::string>{"B"}, "B dropped below min events");
  c.expect(result.scores.size() == expected.size(), "event count");
  for (std::size_t i = 0; i < std::min(expected.size(), result.scores.size()); ++i) {
    const auto& e = expected[i];
    const auto& s = result.scores[i];
    c.expect(s.system_id == e.system, fmt::format("event {} system", i));
    c.expect(s.start_hour == start + e.first && s.end_hour == start + e.last, fmt::format("event {} bounds", i));
    c.expect(std::abs(s.rs.value() - fraction_to_rs(e.out)) <= kExact, fmt::format("event {} rs", i));
  }
  return {c.failures == 0, fmt::format("{} events in {} systems{}", result.scores.size(), result.events.size(),
                                       c.failures ? ", first failure: " + c.first : "")};
}

// ------------------------------------------------------------------ 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const fs::path& scratch) {
  RunConfig c;
  c.seed = 12;
  c.topology.n_service_areas = 6;
  c.topology.poles_per_area = {30, 60};
  c.topology.buildings_per_area = {40, 80};
  c.simulation.episodes = 200;
  c.simulation.episode.recovery.n_teams = 4;
  fs::create_directories(scratch);
  const auto config = (scratch / "config.json").string();
  std::ofstream(config) << dump_run_config(c);
  for (const char* workers : {"1", "4"}) {
    const auto r = cli_run({"--config", config, "--workers", workers, "--out", (scratch / workers).string(), "simulate"});
    if (r.code != 0) return {false, fmt::format("workers {} exited {}: {}", workers, r.code, r.err)};
  }
  std::size_t bytes = 0;
  for (const char* f : {"weather.csv", "labels.csv", "area_summary.csv", "topology.json"}) {
    const auto a = slurp(scratch / "1" / f);
    if (a.empty() || a != slurp(scratch / "4" / f)) return {false, fmt::format("{} differs", f)};
    bytes += a.size();
  }
  return {true, fmt::format("4 files, {} bytes identical at 1 and 4 workers", bytes)};
}

}  // namespace

int main() {
  const auto scratch = fs::temp_directory_path() / "gridres_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracles", metric_oracles},
      {"connectivity oracle", connectivity_oracle},
      {"gradient check", gradient_check},
      {"fragility statistics", fragility_statistics},
      {"desk-scale replication", [&] { return desk_replication(scratch / "replication"); }},
      {"planning round trip", planning_round_trip},
      {"ingestion fixture", ingestion_fixture},
      {"determinism", [&] { return determinism(scratch / "determinism"); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("{} {} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  fs::remove_all(scratch);
  return failed;
}

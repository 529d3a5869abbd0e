#include "gridres/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/csv.hpp"
#include "gridres/error.hpp"
#include "gridres/metrics.hpp"

namespace gridres {

using nlohmann::json;

namespace {
enum Purpose : std::uint64_t { kHazard = 21, kFailure = 22, kRepair = 23, kAnchorStream = 24, kTeams = 25 };
constexpr std::uint64_t kContextStream = 0xC0FFEEULL << 32;
}  // namespace

const char* to_string(WindowMode mode) noexcept { return mode == WindowMode::event ? "event" : "outage"; }

WindowMode window_mode_from_string(const std::string& text) {
  if (text == "event") return WindowMode::event;
  if (text == "outage") return WindowMode::outage;
  throw Error(ErrorCode::invalid_argument, fmt::format("unknown window mode '{}'", text));
}

void EpisodeSettings::validate() const {
  hazard.validate();
  fragility.validate();
  recovery.validate();
  if (hazard.storm_hours.lo < 2) {
    throw Error(ErrorCode::invalid_argument, "hazard: storm_hours must be >= 2 for a resilience window");
  }
}

SimulationContext make_context(const GridTopology& topology, const EpisodeSettings& settings, std::uint64_t seed) {
  settings.validate();
  SimulationContext ctx;
  ctx.topology = &topology;
  RngStream base(seed, kContextStream);
  ctx.anchors = compute_anchors(topology, base.derive(kAnchorStream));
  ctx.team_locations = initial_team_placement(topology, settings.recovery.n_teams, base.derive(kTeams));
  return ctx;
}

EpisodeTrace run_episode(const SimulationContext& context, const EpisodeSettings& settings, std::uint64_t seed,
                         std::uint64_t episode_id) {
  const GridTopology& topo = *context.topology;
  const std::size_t n_areas = topo.service_areas().size();
  RngStream rng(seed, episode_id);

  EpisodeTrace trace;
  trace.episode_id = episode_id;
  const HazardScenario scenario = generate_scenario(topo, settings.hazard, rng.derive(kHazard));
  trace.schedule = scenario.schedule;
  trace.weather = weather_representation(scenario.fields, context.anchors);

  std::vector<char> broken(topo.lines().size(), 0);
  std::vector<int> damaged;
  std::vector<int> break_hour(topo.lines().size(), -1);

  auto record = [&]() {
    const auto served = topo.area_customers_served(broken);
    std::vector<double> row(n_areas, 1.0);
    for (std::size_t a = 0; a < n_areas; ++a) {
      const auto total = topo.area_customers(static_cast<int>(a));
      if (total > 0) row[a] = static_cast<double>(served[a]) / static_cast<double>(total);
    }
    trace.served.push_back(std::move(row));
  };

  const int storm = scenario.schedule.storm_hours;
  for (int h = 0; h < storm; ++h) {
    const auto failed = sample_failures(topo, scenario.fields[static_cast<std::size_t>(h)], broken, settings.fragility,
                                        rng.derive(kFailure, static_cast<std::uint64_t>(h)));
    for (int id : failed) {
      broken[static_cast<std::size_t>(id)] = 1;
      break_hour[static_cast<std::size_t>(id)] = h;
      damaged.push_back(id);
    }
    record();
  }

  if (!damaged.empty()) {
    RngStream repair_rng = rng.derive(kRepair);
    RestorationState state = start_restoration(topo, context.team_locations, damaged, storm);
    while (!state.complete()) {
      state = step_restoration(std::move(state), topo, settings.recovery, repair_rng);
      for (int id : state.just_repaired) {
        broken[static_cast<std::size_t>(id)] = 0;
        trace.outages.push_back({id, break_hour[static_cast<std::size_t>(id)], state.clock});
      }
      record();
    }
  }
  std::sort(trace.outages.begin(), trace.outages.end(),
            [](const LineOutage& a, const LineOutage& b) { return a.line_id < b.line_id; });

  trace.rs_event.resize(n_areas);
  trace.rs_outage.resize(n_areas);
  std::vector<double> curve;
  for (std::size_t a = 0; a < n_areas; ++a) {
    curve.clear();
    for (int h = 0; h < storm; ++h) curve.push_back(trace.served[static_cast<std::size_t>(h)][a]);
    trace.rs_event[a] = trapezoid_resilience(curve).value();

    // The outage window closes on the last hour the area is still degraded,
    // plus the sample at which it is whole again.
    std::size_t end = static_cast<std::size_t>(storm) - 1;
    for (std::size_t h = trace.served.size(); h-- > static_cast<std::size_t>(storm);) {
      if (trace.served[h - 1][a] < 1.0) {
        end = h;
        break;
      }
    }
    curve.clear();
    for (std::size_t h = 0; h <= end; ++h) curve.push_back(trace.served[h][a]);
    trace.rs_outage[a] = trapezoid_resilience(curve).value();
  }
  return trace;
}

json EpisodeTrace::to_json() const {
  json doc;
  doc["schema"] = "gridres.episode/1";
  doc["episode_id"] = episode_id;
  doc["schedule"] = {{"storm_hours", schedule.storm_hours},
                     {"gust_hours", schedule.gust_hours},
                     {"gust_areas", schedule.gust_areas}};
  doc["served"] = served;
  json outs = json::array();
  for (const auto& o : outages) {
    outs.push_back({{"line_id", o.line_id}, {"break_hour", o.break_hour}, {"repair_hour", o.repair_hour}});
  }
  doc["outages"] = std::move(outs);
  doc["rs_event"] = rs_event;
  doc["rs_outage"] = rs_outage;
  return doc;
}

MonteCarloResult run_monte_carlo(const GridTopology& topology, const EpisodeSettings& settings,
                                 const MonteCarloOptions& options) {
  if (options.n_episodes < 1) throw Error(ErrorCode::invalid_argument, "monte carlo: n_episodes must be >= 1");
  const SimulationContext context = make_context(topology, settings, options.seed);
  const auto n = static_cast<std::size_t>(options.n_episodes);
  std::vector<EpisodeTrace> traces(n);

  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        traces[i] = run_episode(context, settings, options.seed, options.first_episode + i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
      const int finished = ++done;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(finished, options.n_episodes);
      }
    }
  };
  const int workers = std::clamp(options.workers, 1, options.n_episodes);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloResult result;
  const std::size_t n_areas = topology.service_areas().size();
  result.areas.resize(n_areas);
  std::vector<double> sum_sq(n_areas, 0.0);
  for (std::size_t a = 0; a < n_areas; ++a) {
    result.areas[a].area_id = static_cast<int>(a);
    result.areas[a].customers = topology.area_customers(static_cast<int>(a));
  }
  for (const auto& trace : traces) {
    for (std::size_t a = 0; a < n_areas; ++a) {
      auto& s = result.areas[a];
      ++s.episodes;
      s.mean_rs_event += trace.rs_event[a];
      s.mean_rs_outage += trace.rs_outage[a];
      if (trace.schedule.has_gusts() && trace.schedule.is_gust_area(static_cast<int>(a))) {
        ++s.gust_samples;
        s.gust_mean_rs_event += trace.rs_event[a];
        s.gust_mean_rs_outage += trace.rs_outage[a];
        sum_sq[a] += trace.rs_event[a] * trace.rs_event[a];
        result.dataset.samples.push_back(
            {static_cast<int>(a), trace.episode_id, trace.weather[a], trace.rs(static_cast<int>(a), settings.window)});
      }
    }
  }
  for (std::size_t a = 0; a < n_areas; ++a) {
    auto& s = result.areas[a];
    s.mean_rs_event /= s.episodes;
    s.mean_rs_outage /= s.episodes;
    if (s.gust_samples > 0) {
      const double m = s.gust_mean_rs_event / s.gust_samples;
      s.gust_mean_rs_event = m;
      s.gust_mean_rs_outage /= s.gust_samples;
      const double var = std::max(0.0, sum_sq[a] / s.gust_samples - m * m);
      s.gust_stderr_event = s.gust_samples > 1 ? std::sqrt(var / (s.gust_samples - 1)) : 0.0;
    } else {
      s.gust_mean_rs_event = std::numeric_limits<double>::quiet_NaN();
      s.gust_mean_rs_outage = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (options.keep_traces) result.traces = std::move(traces);
  return result;
}

void write_weather_csv(std::ostream& out, const SimDataset& dataset) {
  out << "area_id,episode_id,hour";
  for (std::size_t i = 1; i <= kAnchorCount; ++i) out << fmt::format(",w{:02}", i);
  out << '\n';
  for (const auto& s : dataset.samples) {
    for (std::size_t h = 0; h < s.weather.size(); ++h) {
      out << s.area_id << ',' << s.episode_id << ',' << h;
      for (double v : s.weather[h]) out << ',' << csv::format_double(v);
      out << '\n';
    }
  }
}

void write_labels_csv(std::ostream& out, const SimDataset& dataset) {
  out << "area_id,episode_id,rs\n";
  for (const auto& s : dataset.samples) {
    out << s.area_id << ',' << s.episode_id << ',' << csv::format_double(s.rs) << '\n';
  }
}

void write_area_summary_csv(std::ostream& out, const std::vector<AreaSummary>& areas) {
  out << "area_id,customers,episodes,gust_samples,mean_rs_event,mean_rs_outage,gust_mean_rs_event,"
         "gust_mean_rs_outage,gust_stderr_event\n";
  auto opt = [](double v) { return std::isnan(v) ? std::string() : csv::format_double(v); };
  for (const auto& s : areas) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", s.area_id, s.customers, s.episodes, s.gust_samples,
                       csv::format_double(s.mean_rs_event), csv::format_double(s.mean_rs_outage),
                       opt(s.gust_mean_rs_event), opt(s.gust_mean_rs_outage), csv::format_double(s.gust_stderr_event));
  }
}

}  // namespace gridres
